"""Network builders: a feedforward body and a recurrent (GRU) body.

Both bodies share the shape  input -> linear -> relu -> core -> linear ->
output  where the core is either another rectified linear layer or a
single-layer GRU. The GRU follows the canonical 3-gate equations with
gates ordered (reset, update, candidate):

    r = sigmoid(x W_xr + h W_hr + b_r)
    z = sigmoid(x W_xz + h W_hz + b_z)
    n = tanh(x W_xn + r * (h W_hn + b_hn) + b_xn)
    h' = (1 - z) * n + z * h

Weights are stored input-major (in_dim, out_dim) so a batch row vector
multiplies from the left. Batches are always 2-d: (batch, features).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatchError
from ..rng import RngStream
from .autodiff import Tape, Var, concat, matmul, mul, narrow, relu, sigmoid, tanh
from .params import ParameterStore

FEEDFORWARD = "feedforward"
RECURRENT = "recurrent"
CELL_TYPES = (FEEDFORWARD, RECURRENT)


@dataclass(frozen=True)
class NetSpec:
    in_dim: int
    out_dim: int
    hidden_dim: int = 64
    cell: str = FEEDFORWARD

    def validated(self) -> "NetSpec":
        if self.cell not in CELL_TYPES:
            raise DimMismatchError(f"unknown cell type {self.cell!r}")
        if min(self.in_dim, self.out_dim, self.hidden_dim) < 1:
            raise DimMismatchError(f"dims must be >= 1, got {self}")
        return self


class Network:
    """A spec plus its ParameterStore, with tape-recorded forward passes."""

    def __init__(self, spec: NetSpec, rng: RngStream | None = None):
        self.spec = spec.validated()
        self.store = ParameterStore()
        h, o, i = spec.hidden_dim, spec.out_dim, spec.in_dim
        self.store.add("w_in", (i, h))
        self.store.add("b_in", (h,))
        if spec.cell == RECURRENT:
            self.store.add("w_x", (h, 3 * h))
            self.store.add("w_h", (h, 3 * h))
            self.store.add("b_x", (3 * h,))
            self.store.add("b_h", (3 * h,))
        else:
            self.store.add("w_mid", (h, h))
            self.store.add("b_mid", (h,))
        self.store.add("w_out", (h, o))
        self.store.add("b_out", (o,))
        if rng is not None:
            self.store.init_uniform(rng)

    def initial_hidden(self, batch: int) -> np.ndarray:
        return np.zeros((batch, self.spec.hidden_dim))

    def _check_input(self, x: np.ndarray) -> None:
        if x.ndim != 2 or x.shape[1] != self.spec.in_dim:
            raise DimMismatchError(
                f"input shape {x.shape} does not match in_dim {self.spec.in_dim}"
            )

    def _gru_cell(self, tape: Tape, p: dict, x: Var, h: Var) -> Var:
        hd = self.spec.hidden_dim
        gx = matmul(x, p["w_x"]) + p["b_x"]
        gh = matmul(h, p["w_h"]) + p["b_h"]
        r = sigmoid(narrow(gx, -1, 0, hd) + narrow(gh, -1, 0, hd))
        z = sigmoid(narrow(gx, -1, hd, hd) + narrow(gh, -1, hd, hd))
        n = tanh(narrow(gx, -1, 2 * hd, hd) + mul(r, narrow(gh, -1, 2 * hd, hd)))
        return mul(1.0 - z, n) + mul(z, h)

    def _params(self, tape: Tape, frozen: bool) -> dict[str, Var]:
        if frozen:
            # constants: nothing is recorded, so the pass costs no gradient
            # bookkeeping (used for target networks and acting)
            return {name: tape.const(self.store.view(name)) for name in self.store.names}
        return {name: self.store.var(tape, name) for name in self.store.names}

    def forward(self, x: np.ndarray, hidden: np.ndarray | None = None, tape: Tape | None = None,
                frozen: bool = False):
        """One step. Returns (output Var, new hidden array, tape).

        Pass an open tape to chain several calls (and the loss) into one
        backward pass; gradients land in store.grad via tape.backward.
        """
        x = np.asarray(x, dtype=np.float64)
        self._check_input(x)
        tape = tape or Tape()
        p = self._params(tape, frozen)
        out, hs = self._step(tape, p, tape.const(x), hidden)
        return out, hs[0].data if hs else None, tape

    def _step(self, tape: Tape, p: dict, xv: Var, hidden) -> tuple[Var, list[Var]]:
        z = relu(matmul(xv, p["w_in"]) + p["b_in"])
        if self.spec.cell == RECURRENT:
            if hidden is None:
                hidden = self.initial_hidden(xv.shape[0])
            hv = hidden if isinstance(hidden, Var) else tape.const(hidden)
            h = self._gru_cell(tape, p, z, hv)
            out = matmul(h, p["w_out"]) + p["b_out"]
            return out, [h]
        z = relu(matmul(z, p["w_mid"]) + p["b_mid"])
        return matmul(z, p["w_out"]) + p["b_out"], []

    def forward_sequence(self, xs: np.ndarray, hidden: np.ndarray | None = None,
                         tape: Tape | None = None, frozen: bool = False):
        """Unrolled pass over xs of shape (T, batch, in_dim).

        Returns (list of T output Vars, tape). The recurrent state is carried
        as a Var, so backward propagates through the whole unroll.
        """
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 3:
            raise DimMismatchError(f"expected (T, batch, in_dim), got {xs.shape}")
        tape = tape or Tape()
        p = self._params(tape, frozen)
        outs = []
        carry: Var | np.ndarray | None = hidden
        for t in range(xs.shape[0]):
            self._check_input(xs[t])
            out, hs = self._step(tape, p, tape.const(xs[t]), carry)
            if hs:
                carry = hs[0]
            outs.append(out)
        return outs, tape


def concat_inputs(tape: Tape, parts: list[np.ndarray]) -> Var:
    """Convenience: batch-wise concatenation of constant input blocks."""
    return concat([tape.const(np.asarray(p, dtype=np.float64)) for p in parts], axis=-1)
