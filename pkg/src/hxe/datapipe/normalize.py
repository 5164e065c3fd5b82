"""Per-dimension min/max action normalization onto [-1, 1]."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from hxe.core import Episode


class RangeWarning(UserWarning):
    """A value fell outside the fitted bounds and was clamped."""


@dataclass(frozen=True)
class NormStats:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.lo == self.hi

    def to_json(self) -> dict:
        return {"lo": [float(v) for v in self.lo], "hi": [float(v) for v in self.hi]}

    @classmethod
    def from_json(cls, d: dict) -> "NormStats":
        return cls(np.asarray(d["lo"], dtype=np.float64), np.asarray(d["hi"], dtype=np.float64))


def fit_normalization(episodes_or_rows) -> NormStats:
    """Min/max over every action row; accepts episodes or an (N, d) array."""
    if isinstance(episodes_or_rows, np.ndarray):
        rows = episodes_or_rows
    else:
        eps = list(episodes_or_rows)
        rows = np.concatenate([ep.raw_actions for ep in eps]) if eps else np.zeros((0, 0))
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("fit_normalization needs at least one action")
    return NormStats(rows.min(axis=0), rows.max(axis=0))


def normalize_action(a, lo, hi) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    span = hi - lo
    tol = 1e-6 * span
    if np.any(a < lo - tol) or np.any(a > hi + tol):
        warnings.warn(f"action outside normalization bounds, clamping: {a}", RangeWarning, stacklevel=2)
    a = np.clip(a, lo, hi)
    safe = np.where(span > 0, span, 1.0)
    out = 2.0 * (a - lo) / safe - 1.0
    return np.where(span > 0, out, 0.0)


def denormalize_action(u, lo, hi) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    return lo + (u + 1.0) * 0.5 * (hi - lo)


def episodes_rows(episodes: list[Episode]) -> np.ndarray:
    return np.concatenate([ep.raw_actions for ep in episodes]).astype(np.float64)
