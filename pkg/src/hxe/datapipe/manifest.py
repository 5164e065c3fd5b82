from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hxe.core import ConfigError, Episode
from hxe.datapipe.alignment import CONVENTION_DIMS, AlignmentMap, alignment_for
from hxe.datapipe.normalize import NormStats, fit_normalization
from hxe.simworld.embodiments import domain_of, get_profile

MANIFEST_VERSION = 1
DEFAULT_HORIZON = 5


@dataclass
class DatasetManifest:
    dataset_id: str
    embodiment_id: str
    episode_count: int
    obs_shape: tuple[int, int, int]
    convention: str
    alignment: AlignmentMap
    norm: NormStats
    weight: float
    domain: str
    label_horizon: int = DEFAULT_HORIZON
    episode_meta: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.convention not in CONVENTION_DIMS:
            raise ConfigError(f"unknown action convention {self.convention!r}")
        if not math.isfinite(self.weight) or self.weight < 0:
            raise ConfigError(f"dataset weight must be finite and >= 0, got {self.weight}")
        if self.domain not in ("navigation", "manipulation"):
            raise ConfigError(f"unknown domain {self.domain!r}")
        self.obs_shape = tuple(int(v) for v in self.obs_shape)  # type: ignore[assignment]

    def to_json(self) -> dict:
        return {
            "version": MANIFEST_VERSION,
            "dataset_id": self.dataset_id,
            "embodiment_id": self.embodiment_id,
            "episode_count": self.episode_count,
            "obs_shape": list(self.obs_shape),
            "convention": self.convention,
            "alignment": self.alignment.to_json(),
            "normalization": self.norm.to_json(),
            "degenerate": [bool(v) for v in self.norm.degenerate],
            "weight": self.weight,
            "domain": self.domain,
            "label_horizon": self.label_horizon,
            "episode_meta": self.episode_meta,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DatasetManifest":
        if d.get("version") != MANIFEST_VERSION:
            raise ConfigError(f"unsupported manifest version {d.get('version')!r}")
        return cls(
            dataset_id=d["dataset_id"],
            embodiment_id=d["embodiment_id"],
            episode_count=int(d["episode_count"]),
            obs_shape=tuple(d["obs_shape"]),
            convention=d["convention"],
            alignment=AlignmentMap.from_json(d["alignment"]),
            norm=NormStats.from_json(d["normalization"]),
            weight=float(d["weight"]),
            domain=d["domain"],
            label_horizon=int(d.get("label_horizon", DEFAULT_HORIZON)),
            episode_meta=list(d.get("episode_meta", [])),
        )


def build_manifest(
    dataset_id: str, episodes: list[Episode], weight: float | None = None, horizon: int = DEFAULT_HORIZON
) -> DatasetManifest:
    """Fit statistics over the label rows the sampler will actually emit."""
    from hxe.datapipe.labels import label_rows

    if not episodes:
        raise ConfigError("cannot build a manifest for an empty dataset")
    profile = get_profile(episodes[0].embodiment_id)
    rows = np.concatenate(
        [label_rows(ep, t, horizon, profile.convention).reshape(-1, ep.action_dim) for ep in episodes for t in range(ep.length - 1)]
    )
    return DatasetManifest(
        dataset_id=dataset_id,
        embodiment_id=profile.embodiment_id,
        episode_count=len(episodes),
        obs_shape=episodes[0].observations[0].shape,
        convention=profile.convention,
        alignment=alignment_for(profile),
        norm=fit_normalization(rows),
        weight=float(len(episodes) if weight is None else weight),
        domain=domain_of(profile),
        label_horizon=horizon,
        episode_meta=[_jsonable(ep.meta) for ep in episodes],
    )


def _jsonable(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if isinstance(v, (np.integer,)):
            v = int(v)
        elif isinstance(v, (np.floating,)):
            v = float(v)
        out[k] = v
    return out
