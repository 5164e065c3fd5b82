"""Unified actions back to an embodiment's physical units."""

from __future__ import annotations

import numpy as np

from hxe.core import UNIFIED_DIM
from hxe.datapipe.alignment import canonical_map
from hxe.datapipe.manifest import DatasetManifest
from hxe.datapipe.normalize import denormalize_action, normalize_action
from hxe.simworld.embodiments import get_profile
from hxe.simworld.expert import native_to_physical, physical_to_native


class ActionDecoder:
    """Inverse alignment, then min/max denormalization, then native-to-physical reordering.

    ``ActionDecoder.unit(convention)`` skips the scale (bounds of [-1, 1]).
    """

    def __init__(self, manifest: DatasetManifest | None = None, *, convention: str | None = None):
        if manifest is not None:
            self.convention = manifest.convention
            self.profile = get_profile(manifest.embodiment_id)
            self.inverse = manifest.alignment.inverse()
            self.lo, self.hi = manifest.norm.lo, manifest.norm.hi
            self.native_dim = manifest.alignment.source_dim
        else:
            amap = canonical_map(convention)
            self.convention = convention
            self.profile = None
            self.inverse = amap.inverse()
            self.native_dim = amap.source_dim
            self.lo, self.hi = -np.ones(self.native_dim), np.ones(self.native_dim)

    @classmethod
    def unit(cls, convention: str) -> "ActionDecoder":
        return cls(convention=convention)

    def to_native(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        return denormalize_action(self.inverse.apply(u), self.lo, self.hi)

    def to_physical(self, u) -> np.ndarray:
        native = self.to_native(u)
        if self.profile is None or not self.profile.native_perm:
            return native
        return native_to_physical(native, self.profile)

    def encode_physical(self, phys) -> np.ndarray:
        """Physical action to unified coordinates (the training-time path, without range warnings)."""
        phys = np.asarray(phys, dtype=np.float64)
        native = phys if self.profile is None or not self.profile.native_perm else physical_to_native(phys, self.profile)
        native = np.clip(native, self.lo, self.hi)
        return self.inverse.inverse().apply(normalize_action(native, self.lo, self.hi))

    def zero_motion(self) -> np.ndarray:
        """Unified encoding of a command with no translation or rotation."""
        phys = np.zeros(self.native_dim)
        return self.encode_physical(np.clip(phys, np.minimum(self.lo, 0), np.maximum(self.hi, 0)))

    def translation_scale(self) -> np.ndarray:
        """Physical units per normalized unit for each unified translation dim (0 where unused)."""
        scale = np.zeros(UNIFIED_DIM)
        half = (np.asarray(self.hi) - np.asarray(self.lo)) / 2.0
        for j in range(3):
            p = self.inverse.inverse().perm[j]
            if p >= 0:
                scale[j] = half[p]
        return scale
