"""Gradient-descent optimizers over flat parameter vectors."""
from __future__ import annotations

import numpy as np

from ..errors import DimMismatchError
from .params import ParameterStore


class Adam:
    """Standard Adam with bias correction."""

    def __init__(self, store: ParameterStore, lr: float = 5e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros(store.size)
        self.v = np.zeros(store.size)

    def step(self, grads: np.ndarray | None = None) -> None:
        g = self.store.grad if grads is None else np.asarray(grads, dtype=np.float64)
        if g.shape != self.store.flat.shape:
            raise DimMismatchError("gradient length does not match parameters")
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * g
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * g * g
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        self.store.flat -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class RMSProp:
    """Running-RMS scaled gradient descent."""

    def __init__(self, store: ParameterStore, lr: float = 5e-4,
                 decay: float = 0.99, eps: float = 1e-5):
        self.store = store
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.v = np.zeros(store.size)

    def step(self, grads: np.ndarray | None = None) -> None:
        g = self.store.grad if grads is None else np.asarray(grads, dtype=np.float64)
        if g.shape != self.store.flat.shape:
            raise DimMismatchError("gradient length does not match parameters")
        self.v = self.decay * self.v + (1.0 - self.decay) * g * g
        self.store.flat -= self.lr * g / (np.sqrt(self.v) + self.eps)
