"""Variance-preserving noise schedule with squared-cosine cumulative signal."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_BETA = 0.999
COSINE_OFFSET = 0.008


def squared_cosine_betas(K: int, s: float = COSINE_OFFSET, max_beta: float = MAX_BETA) -> np.ndarray:
    def alpha_bar(u: float) -> float:
        return math.cos((u + s) / (1 + s) * math.pi / 2) ** 2

    return np.array([min(1 - alpha_bar((k + 1) / K) / alpha_bar(k / K), max_beta) for k in range(K)])


@dataclass
class NoiseSchedule:
    K: int = 10
    betas: np.ndarray = field(init=False, repr=False)
    alphas: np.ndarray = field(init=False, repr=False)
    alpha_bar: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"need at least one diffusion step, got K={self.K}")
        self.betas = squared_cosine_betas(self.K)
        self.alphas = 1.0 - self.betas
        self.alpha_bar = np.cumprod(self.alphas)

    def check_step(self, k) -> None:
        k = np.asarray(k)
        if np.any(k < 0) or np.any(k >= self.K):
            raise ValueError(f"diffusion step out of range [0, {self.K}): {k}")

    def add_noise(self, a0: np.ndarray, k, eps: np.ndarray) -> np.ndarray:
        """x_k = sqrt(abar_k) a0 + sqrt(1 - abar_k) eps. ``k`` may be per-row (leading axis)."""
        self.check_step(k)
        ab = self.alpha_bar[np.asarray(k)]
        ab = ab.reshape(ab.shape + (1,) * (np.ndim(a0) - ab.ndim))
        return np.sqrt(ab) * a0 + np.sqrt(1.0 - ab) * eps

    def step(self, x: np.ndarray, eps_hat: np.ndarray, k: int, noise: np.ndarray | None, clip: float = 1.0) -> np.ndarray:
        """One ancestral DDPM step x_k -> x_{k-1}, predicting x0 and clipping it first."""
        ab = self.alpha_bar[k]
        ab_prev = self.alpha_bar[k - 1] if k > 0 else 1.0
        x0 = np.clip((x - math.sqrt(1 - ab) * eps_hat) / math.sqrt(ab), -clip, clip)
        c0 = math.sqrt(ab_prev) * self.betas[k] / (1 - ab)
        ck = math.sqrt(self.alphas[k]) * (1 - ab_prev) / (1 - ab)
        mean = c0 * x0 + ck * x
        if k == 0 or noise is None:
            return mean
        var = (1 - ab_prev) / (1 - ab) * self.betas[k]
        return mean + math.sqrt(var) * noise

    def to_json(self) -> dict:
        return {"K": self.K, "kind": "squared_cosine", "offset": COSINE_OFFSET, "max_beta": MAX_BETA,
                "alpha_bar": [float(v) for v in self.alpha_bar]}
