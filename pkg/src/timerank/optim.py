"""Adaptive gradient-descent steps over named parameter dictionaries.

A step mutates the given parameter arrays in place and only touches names that
appear in both the parameter dict and the gradient dict, so the caller controls
the update scope by passing the right parameter subset.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError


def _checked(name: str, param: np.ndarray, grad: np.ndarray) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != param.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match "
                         f"parameter {name!r} shape {param.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericalError(f"non-finite gradient for parameter {name!r}")
    return grad


class RMSProp:
    def __init__(self, lr: float = 2e-4, rho: float = 0.9, eps: float = 1e-8):
        self.lr = lr
        self.rho = rho
        self.eps = eps
        self.square_avg: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, param in params.items():
            grad = grads.get(name)
            if grad is None:
                continue
            grad = _checked(name, param, grad)
            acc = self.square_avg.setdefault(name, np.zeros_like(param))
            acc *= self.rho
            acc += (1.0 - self.rho) * grad * grad
            param -= self.lr * grad / np.sqrt(acc + self.eps)


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, param in params.items():
            grad = grads.get(name)
            if grad is None:
                continue
            grad = _checked(name, param, grad)
            m = self.m.setdefault(name, np.zeros_like(param))
            v = self.v.setdefault(name, np.zeros_like(param))
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1 ** self.t)
            v_hat = v / (1.0 - self.beta2 ** self.t)
            param -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
