"""Adam and the cosine learning-rate schedule."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from hxe.core import ShapeError


def cosine_lr(step: int, total_steps: int, lr_max: float) -> float:
    """Half-cosine decay from ``lr_max`` to 0. Steps past the end return the final value."""
    if total_steps <= 0:
        raise ValueError(f"total_steps must be positive, got {total_steps}")
    s = min(max(step, 0), total_steps)
    return lr_max * 0.5 * (1.0 + math.cos(math.pi * s / total_steps))


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    m: Sequence[np.ndarray],
    v: Sequence[np.ndarray],
    t: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One in-place Adam update. ``t`` is the 1-based step count used for bias correction."""
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, mi, vi in zip(params, grads, m, v, strict=True):
        if p.shape != g.shape:
            raise ShapeError(f"adam: parameter {p.shape} vs gradient {g.shape}")
        mi *= beta1
        mi += (1.0 - beta1) * g
        vi *= beta2
        vi += (1.0 - beta2) * g * g
        p -= (lr * (mi / c1) / (np.sqrt(vi / c2) + eps)).astype(p.dtype, copy=False)


class Adam:
    """Stateful wrapper holding moment buffers for a fixed parameter list."""

    def __init__(self, params, lr: float = 1e-4, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.t = 0

    def step(self, lr: float | None = None) -> None:
        self.t += 1
        grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in self.params]
        adam_step([p.data for p in self.params], grads, self.m, self.v, self.t,
                  self.lr if lr is None else lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
