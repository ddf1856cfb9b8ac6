"""Flat parameter storage.

All learnables of a network live in one contiguous float64 vector, with
named views tiling it exactly; the gradient vector is its same-shaped twin.
Keeping everything flat makes optimizers, target-network copies, and
checkpoint serialization trivial array operations.
"""
from __future__ import annotations

import numpy as np

from ..errors import DimMismatchError
from ..rng import RngStream
from .autodiff import Tape, Var


class ParameterStore:
    def __init__(self):
        self._names: list[str] = []
        self._shapes: dict[str, tuple[int, ...]] = {}
        self._offsets: dict[str, int] = {}
        self.flat = np.zeros(0)
        self.grad = np.zeros(0)

    @property
    def size(self) -> int:
        return self.flat.size

    @property
    def names(self) -> list[str]:
        return list(self._names)

    def add(self, name: str, shape: tuple[int, ...]) -> None:
        if name in self._shapes:
            raise ValueError(f"duplicate parameter name {name!r}")
        n = int(np.prod(shape))
        self._names.append(name)
        self._shapes[name] = tuple(shape)
        self._offsets[name] = self.flat.size
        self.flat = np.concatenate([self.flat, np.zeros(n)])
        self.grad = np.zeros_like(self.flat)

    def view(self, name: str) -> np.ndarray:
        off = self._offsets[name]
        shape = self._shapes[name]
        return self.flat[off : off + int(np.prod(shape))].reshape(shape)

    def grad_view(self, name: str) -> np.ndarray:
        off = self._offsets[name]
        shape = self._shapes[name]
        return self.grad[off : off + int(np.prod(shape))].reshape(shape)

    def zero_grad(self) -> None:
        self.grad[:] = 0.0

    def var(self, tape: Tape, name: str) -> Var:
        """A gradient-tracked Var over a copy of the named tensor.

        collect_grads routes the Var's gradient back into self.grad.
        """
        v = tape.param(self.view(name).copy())
        tape._ops.insert(0, (v, _make_sink(self, name, v)))
        return v

    def copy_from(self, other: "ParameterStore") -> None:
        if other.flat.size != self.flat.size:
            raise DimMismatchError("parameter vectors differ in length")
        self.flat[:] = other.flat

    def clone(self) -> "ParameterStore":
        dup = ParameterStore()
        dup._names = list(self._names)
        dup._shapes = dict(self._shapes)
        dup._offsets = dict(self._offsets)
        dup.flat = self.flat.copy()
        dup.grad = np.zeros_like(dup.flat)
        return dup

    def init_uniform(self, rng: RngStream) -> None:
        """Scaled-uniform fill: each tensor ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)).

        fan_in is the tensor's first dimension (a bias vector's own length).
        """
        for name in self._names:
            view = self.view(name)
            fan_in = view.shape[0]
            bound = 1.0 / np.sqrt(fan_in)
            view[:] = (rng.random_vec(view.size) * 2.0 - 1.0).reshape(view.shape) * bound


def _make_sink(store: ParameterStore, name: str, v: Var):
    def sink(g: np.ndarray) -> None:
        store.grad_view(name)[:] += g

    return sink
