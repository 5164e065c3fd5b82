"""Dimension permutation + sign maps from dataset-native actions to the unified frame."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hxe.core import UNIFIED_DIM, ConfigError, EmbodimentProfile, ShapeError, UnifiedAction

# target slot <- physical component, for the canonical physical orders
#   manipulator: (forward, left, up, roll, pitch, yaw, gripper)
#   navigator:   (forward, left)
#   drone:       (forward, left, up)
# forward (into the scene) lands on -z, left on +y, up on +x.
_CANONICAL = {
    "manip_cart7": ([2, 1, 0, 3, 4, 5, 6], [1, 1, -1, 1, 1, 1, 1]),
    "nav_fwd_left": ([-1, 1, 0, -1, -1, -1, -1], [1, 1, -1, 1, 1, 1, 1]),
    "drone_xyz": ([2, 1, 0, -1, -1, -1, -1], [1, 1, -1, 1, 1, 1, 1]),
}
CONVENTION_DIMS = {"manip_cart7": 7, "nav_fwd_left": 2, "drone_xyz": 3}


@dataclass(frozen=True)
class AlignmentMap:
    """``out[j] = signs[j] * a[perm[j]]``; slots with ``perm[j] == -1`` stay zero."""

    perm: tuple[int, ...]
    signs: tuple[float, ...]
    source_dim: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "perm", tuple(int(p) for p in self.perm))
        object.__setattr__(self, "signs", tuple(float(s) for s in self.signs))
        if len(self.perm) != len(self.signs):
            raise ConfigError("perm and signs must have equal length")
        used = [p for p in self.perm if p >= 0]
        if len(set(used)) != len(used):
            raise ConfigError(f"alignment perm is not injective: {self.perm}")
        if any(p >= self.source_dim or p < -1 for p in self.perm):
            raise ConfigError(f"alignment perm {self.perm} out of range for source dim {self.source_dim}")
        if any(s not in (-1.0, 1.0) for s in self.signs):
            raise ConfigError(f"alignment signs must be +-1: {self.signs}")

    @property
    def pad_to(self) -> int:
        return len(self.perm)

    def apply(self, a: np.ndarray) -> np.ndarray:
        """Vectorised over leading dims."""
        a = np.asarray(a, dtype=np.float64)
        if a.shape[-1] != self.source_dim:
            raise ShapeError(f"action has {a.shape[-1]} dims, alignment map expects {self.source_dim}")
        out = np.zeros(a.shape[:-1] + (self.pad_to,))
        for j, (p, s) in enumerate(zip(self.perm, self.signs)):
            if p >= 0:
                out[..., j] = s * a[..., p]
        return out

    def inverse(self) -> "AlignmentMap":
        perm = [-1] * self.source_dim
        signs = [1.0] * self.source_dim
        for j, (p, s) in enumerate(zip(self.perm, self.signs)):
            if p >= 0:
                perm[p] = j
                signs[p] = s
        return AlignmentMap(tuple(perm), tuple(signs), self.pad_to)

    def to_json(self) -> dict:
        return {"perm": list(self.perm), "signs": list(self.signs), "source_dim": self.source_dim}

    @classmethod
    def from_json(cls, d: dict) -> "AlignmentMap":
        return cls(tuple(d["perm"]), tuple(d["signs"]), int(d["source_dim"]))


def align_to_unified(a_norm, amap: AlignmentMap) -> UnifiedAction:
    if amap.pad_to != UNIFIED_DIM:
        raise ShapeError(f"alignment map pads to {amap.pad_to}, unified space has {UNIFIED_DIM} dims")
    return UnifiedAction(amap.apply(a_norm))


def canonical_map(convention: str) -> AlignmentMap:
    if convention not in _CANONICAL:
        raise ConfigError(f"unknown action convention {convention!r}")
    perm, signs = _CANONICAL[convention]
    return AlignmentMap(tuple(perm), tuple(signs), CONVENTION_DIMS[convention])


def alignment_for(profile: EmbodimentProfile) -> AlignmentMap:
    """Compose the profile's native scrambling with the canonical physical->unified map."""
    canon = canonical_map(profile.convention)
    if not profile.native_perm:
        return canon
    # native[i] = native_signs[i] * phys[native_perm[i]]
    where = {p: i for i, p in enumerate(profile.native_perm)}
    perm, signs = [], []
    for p, s in zip(canon.perm, canon.signs):
        if p < 0:
            perm.append(-1)
            signs.append(1.0)
        else:
            i = where[p]
            perm.append(i)
            signs.append(s * profile.native_signs[i])
    return AlignmentMap(tuple(perm), tuple(signs), len(profile.native_perm))
