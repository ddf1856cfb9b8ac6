"""Reverse-mode automatic differentiation on numpy arrays.

A Tape records every operation applied to its Vars in forward order;
Tape.backward replays the records in reverse, accumulating gradients. All
arithmetic is float64. One tape serves one forward pass: backward consumes
it, and mixing Vars across tapes raises StaleTapeError.

Gradients flow only into Vars created with requires=True (parameters);
constants never allocate gradient storage. Broadcasting in add/mul/sub is
supported and the backward pass sums the broadcast axes back out.
"""
from __future__ import annotations

import numpy as np

from ..errors import StaleTapeError

Array = np.ndarray


class Var:
    """A node in the recorded computation: an array plus its gradient slot."""

    __slots__ = ("data", "grad", "requires", "_tape")

    def __init__(self, data: Array, tape: "Tape", requires: bool):
        self.data = data
        self.grad: Array | None = None
        self.requires = requires
        self._tape = tape

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def _bump(self, g: Array) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    # operator sugar; scalars are folded in as constants
    def __add__(self, other):
        return add(self, _lift(self._tape, other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _lift(self._tape, other))

    def __rsub__(self, other):
        return sub(_lift(self._tape, other), self)

    def __mul__(self, other):
        return mul(self, _lift(self._tape, other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        if isinstance(c, Var):
            raise TypeError("divide by a constant, not a Var")
        return mul(self, _lift(self._tape, 1.0 / c))

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return mul(self, _lift(self._tape, -1.0))


class Tape:
    """Ordered record of one forward pass."""

    __slots__ = ("_ops", "_spent")

    def __init__(self):
        self._ops: list = []
        self._spent = False

    def const(self, data) -> Var:
        return Var(np.asarray(data, dtype=np.float64), self, requires=False)

    def param(self, data: Array) -> Var:
        return Var(np.asarray(data, dtype=np.float64), self, requires=True)

    def backward(self, out: Var, seed: Array | float | None = None) -> None:
        """Accumulate d(out)/d(var) into every requiring Var's .grad."""
        if self._spent:
            raise StaleTapeError("tape already consumed by a backward pass")
        if out._tape is not self:
            raise StaleTapeError("output Var belongs to a different tape")
        self._spent = True
        if seed is None:
            seed = np.ones_like(out.data)
        out._bump(np.broadcast_to(np.asarray(seed, dtype=np.float64), out.shape))
        for node, back in reversed(self._ops):
            if node.grad is not None:
                back(node.grad)


def _lift(tape: Tape, value) -> Var:
    if isinstance(value, Var):
        return value
    return tape.const(value)


def _join(*vars_: Var) -> Tape:
    tape = vars_[0]._tape
    for v in vars_[1:]:
        if v._tape is not tape:
            raise StaleTapeError("variables come from different tapes")
    if tape._spent:
        raise StaleTapeError("tape already consumed by a backward pass")
    return tape


def _record(tape: Tape, data: Array, inputs: tuple[Var, ...], back) -> Var:
    out = Var(data, tape, requires=any(v.requires for v in inputs))
    if out.requires:
        tape._ops.append((out, back))
    return out


def _unbroadcast(g: Array, shape: tuple[int, ...]) -> Array:
    """Sum g back down to `shape` after numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitives


def add(a: Var, b: Var) -> Var:
    tape = _join(a, b)

    def back(g):
        if a.requires:
            a._bump(_unbroadcast(g, a.shape))
        if b.requires:
            b._bump(_unbroadcast(g, b.shape))

    return _record(tape, a.data + b.data, (a, b), back)


def sub(a: Var, b: Var) -> Var:
    tape = _join(a, b)

    def back(g):
        if a.requires:
            a._bump(_unbroadcast(g, a.shape))
        if b.requires:
            b._bump(_unbroadcast(-g, b.shape))

    return _record(tape, a.data - b.data, (a, b), back)


def mul(a: Var, b: Var) -> Var:
    tape = _join(a, b)

    def back(g):
        if a.requires:
            a._bump(_unbroadcast(g * b.data, a.shape))
        if b.requires:
            b._bump(_unbroadcast(g * a.data, b.shape))

    return _record(tape, a.data * b.data, (a, b), back)


def matmul(a: Var, b: Var) -> Var:
    tape = _join(a, b)

    def back(g):
        if a.requires:
            a._bump(_unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires:
            b._bump(_unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape))

    return _record(tape, a.data @ b.data, (a, b), back)


def relu(a: Var) -> Var:
    mask = a.data > 0

    def back(g):
        a._bump(g * mask)

    return _record(_join(a), a.data * mask, (a,), back)


def tanh(a: Var) -> Var:
    y = np.tanh(a.data)

    def back(g):
        a._bump(g * (1.0 - y * y))

    return _record(_join(a), y, (a,), back)


def sigmoid(a: Var) -> Var:
    y = 1.0 / (1.0 + np.exp(-a.data))

    def back(g):
        a._bump(g * y * (1.0 - y))

    return _record(_join(a), y, (a,), back)


def elu(a: Var) -> Var:
    neg = a.data <= 0
    y = np.where(neg, np.expm1(a.data), a.data)

    def back(g):
        a._bump(g * np.where(neg, y + 1.0, 1.0))

    return _record(_join(a), y, (a,), back)


def absolute(a: Var) -> Var:
    s = np.sign(a.data)

    def back(g):
        a._bump(g * s)

    return _record(_join(a), np.abs(a.data), (a,), back)


def square(a: Var) -> Var:
    def back(g):
        a._bump(g * 2.0 * a.data)

    return _record(_join(a), a.data * a.data, (a,), back)


def exp(a: Var) -> Var:
    y = np.exp(a.data)

    def back(g):
        a._bump(g * y)

    return _record(_join(a), y, (a,), back)


def log(a: Var) -> Var:
    def back(g):
        a._bump(g / a.data)

    return _record(_join(a), np.log(a.data), (a,), back)


def clip(a: Var, lo: float, hi: float) -> Var:
    inside = (a.data > lo) & (a.data < hi)

    def back(g):
        a._bump(g * inside)

    return _record(_join(a), np.clip(a.data, lo, hi), (a,), back)


def minimum(a: Var, b: Var) -> Var:
    tape = _join(a, b)
    take_a = a.data <= b.data

    def back(g):
        if a.requires:
            a._bump(_unbroadcast(g * take_a, a.shape))
        if b.requires:
            b._bump(_unbroadcast(g * ~take_a, b.shape))

    return _record(tape, np.minimum(a.data, b.data), (a, b), back)


def total(a: Var) -> Var:
    """Sum of all entries, as a scalar Var."""

    def back(g):
        a._bump(np.broadcast_to(g, a.shape))

    return _record(_join(a), np.asarray(a.data.sum()), (a,), back)


def mean(a: Var) -> Var:
    n = a.data.size

    def back(g):
        a._bump(np.broadcast_to(g / n, a.shape))

    return _record(_join(a), np.asarray(a.data.mean()), (a,), back)


def sum_along(a: Var, axis: int, keepdims: bool = False) -> Var:
    def back(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        a._bump(np.broadcast_to(g, a.shape))

    return _record(_join(a), a.data.sum(axis=axis, keepdims=keepdims), (a,), back)


def reshape(a: Var, shape: tuple[int, ...]) -> Var:
    old = a.shape

    def back(g):
        a._bump(g.reshape(old))

    return _record(_join(a), a.data.reshape(shape), (a,), back)


def transpose2(a: Var) -> Var:
    """Swap the two axes of a 2-d value."""

    def back(g):
        a._bump(g.T)

    return _record(_join(a), a.data.T.copy(), (a,), back)


def concat(parts: list[Var], axis: int = -1) -> Var:
    tape = _join(*parts)
    sizes = [p.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        for p, piece in zip(parts, np.split(g, splits, axis=axis)):
            if p.requires:
                p._bump(piece)

    return _record(tape, np.concatenate([p.data for p in parts], axis=axis), tuple(parts), back)


def narrow(a: Var, axis: int, start: int, length: int) -> Var:
    sl = [slice(None)] * a.data.ndim
    sl[axis] = slice(start, start + length)
    sl = tuple(sl)

    def back(g):
        full = np.zeros_like(a.data)
        full[sl] = g
        a._bump(full)

    return _record(_join(a), a.data[sl], (a,), back)


def gather_last(a: Var, index: Array) -> Var:
    """Pick one entry along the last axis; index shape = a.shape[:-1] + (1,)."""
    idx = np.asarray(index, dtype=np.int64)

    def back(g):
        full = np.zeros_like(a.data)
        np.put_along_axis(full, idx, g, axis=-1)
        a._bump(full)

    return _record(_join(a), np.take_along_axis(a.data, idx, axis=-1), (a,), back)


def log_softmax(a: Var) -> Var:
    """Log of the softmax along the last axis, computed stably."""
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    probs = np.exp(out)

    def back(g):
        a._bump(g - probs * g.sum(axis=-1, keepdims=True))

    return _record(_join(a), out, (a,), back)


def softmax(a: Var) -> Var:
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def back(g):
        a._bump(y * (g - (g * y).sum(axis=-1, keepdims=True)))

    return _record(_join(a), y, (a,), back)
