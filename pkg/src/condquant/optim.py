"""Adam over a flat parameter vector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass
class AdamState:
    size: int
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None
    t: int = 0
    m: np.ndarray = field(default=None, repr=False)
    v: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.lr > 0 or not self.eps > 0:
            raise ValueError("Adam needs lr > 0 and eps > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam needs 0 <= beta1, beta2 < 1")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive when set")
        self.m = np.zeros(self.size) if self.m is None else np.array(self.m, dtype=np.float64)
        self.v = np.zeros(self.size) if self.v is None else np.array(self.v, dtype=np.float64)
        if self.m.shape != (self.size,) or self.v.shape != (self.size,):
            raise ValueError(f"moment vectors must have length {self.size}")

    def to_dict(self) -> dict:
        return {"t": self.t, "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "clip_norm": self.clip_norm}


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """Apply one Adam update; mutates ``state`` and returns the new parameters.

    A non-finite gradient raises before anything is touched.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != (state.size,) or np.shape(params) != (state.size,):
        raise ValueError(f"params and grad must have length {state.size}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteGradientError("non-finite gradient")
    if state.clip_norm is not None:
        norm = float(np.linalg.norm(grad))
        if norm > state.clip_norm:
            grad = grad * (state.clip_norm / norm)

    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1 - state.beta2) * grad * grad
    m_hat = state.m / (1 - state.beta1**state.t)
    v_hat = state.v / (1 - state.beta2**state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
