"""Dataset directories: ``manifest.json`` plus one binary ``.hxe`` file per episode.

Episode file layout, little-endian::

    magic "HXE1" | version u16 | T u32 | action_dim u16 | H u16 | W u16 | C u16 | pose kind u8
    payload: poses (T x kind f64) | raw actions ((T-1) x action_dim f32) | observations (T x H*W*C f32)
    CRC32(payload) u32

Pose kind is the number of f64 fields per pose: 3 for (x, y, yaw), 4 for (x, y, z, yaw).
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from hxe.core import (
    ChecksumError,
    EgoObservation,
    Episode,
    FormatError,
    PersistenceError,
    Pose2D,
    Pose3D,
    TruncatedError,
    VersionError,
)
from hxe.datapipe.manifest import DatasetManifest

EPISODE_MAGIC = b"HXE1"
EPISODE_VERSION = 1
_HEADER = struct.Struct("<4sHIHHHHB")


def encode_episode(ep: Episode) -> bytes:
    T = ep.length
    H, W, C = ep.observations[0].shape
    kind = 4 if isinstance(ep.poses[0], Pose3D) else 3
    poses = np.array([p.as_tuple() for p in ep.poses], dtype="<f8").reshape(T, kind)
    actions = np.ascontiguousarray(ep.raw_actions, dtype="<f4")
    obs = np.ascontiguousarray(ep.obs_array(), dtype="<f4")
    payload = poses.tobytes() + actions.tobytes() + obs.tobytes()
    header = _HEADER.pack(EPISODE_MAGIC, EPISODE_VERSION, T, ep.action_dim, H, W, C, kind)
    return header + payload + struct.pack("<I", zlib.crc32(payload))


def decode_episode(buf: bytes, dataset_id: str = "", embodiment_id: str = "", meta: dict | None = None) -> Episode:
    if len(buf) < 4:
        raise TruncatedError("file shorter than the magic bytes")
    if buf[:4] != EPISODE_MAGIC:
        raise FormatError(f"bad magic {buf[:4]!r}, expected {EPISODE_MAGIC!r}")
    if len(buf) < _HEADER.size:
        raise TruncatedError("file shorter than the header")
    _, version, T, adim, H, W, C, kind = _HEADER.unpack_from(buf)
    if version != EPISODE_VERSION:
        raise VersionError(f"episode format version {version}, this reader supports {EPISODE_VERSION}")
    if kind not in (3, 4):
        raise FormatError(f"unknown pose kind {kind}")
    n_pose, n_act, n_obs = T * kind * 8, (T - 1) * adim * 4, T * H * W * C * 4
    end = _HEADER.size + n_pose + n_act + n_obs
    if len(buf) < end + 4:
        raise TruncatedError(f"expected {end + 4} bytes, got {len(buf)}")
    if len(buf) > end + 4:
        raise FormatError(f"{len(buf) - end - 4} trailing bytes after checksum")
    payload = buf[_HEADER.size : end]
    (crc,) = struct.unpack_from("<I", buf, end)
    if zlib.crc32(payload) != crc:
        raise ChecksumError("payload CRC32 mismatch")
    off = 0
    poses_arr = np.frombuffer(payload, "<f8", T * kind, off).reshape(T, kind)
    off += n_pose
    actions = np.frombuffer(payload, "<f4", (T - 1) * adim, off).reshape(T - 1, adim).astype(np.float32)
    off += n_act
    obs = np.frombuffer(payload, "<f4", T * H * W * C, off).reshape(T, H, W, C).astype(np.float32)
    cls = Pose3D if kind == 4 else Pose2D
    poses = [cls(*map(float, row)) for row in poses_arr]
    observations = [EgoObservation(obs[i], i) for i in range(T)]
    return Episode(dataset_id, embodiment_id, observations, actions, poses, dict(meta or {}))


def episode_path(root: Path, i: int) -> Path:
    return Path(root) / "episodes" / f"ep_{i:06d}.hxe"


def write_manifest(path: Path, manifest: DatasetManifest) -> None:
    Path(path).write_text(json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_dataset(path, manifest: DatasetManifest, episodes: list[Episode]) -> None:
    root = Path(path)
    if manifest.episode_count != len(episodes):
        raise ValueError(f"manifest lists {manifest.episode_count} episodes, got {len(episodes)}")
    (root / "episodes").mkdir(parents=True, exist_ok=True)
    for i, ep in enumerate(episodes):
        ep.validate()
        if tuple(ep.observations[0].shape) != tuple(manifest.obs_shape):
            raise ValueError(f"episode {i} observation shape {ep.observations[0].shape} != manifest {manifest.obs_shape}")
        episode_path(root, i).write_bytes(encode_episode(ep))
    write_manifest(root / "manifest.json", manifest)


def read_manifest(path) -> DatasetManifest:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    return DatasetManifest.from_json(json.loads(p.read_text(encoding="utf-8")))


def read_dataset(path) -> tuple[DatasetManifest, list[Episode]]:
    root = Path(path)
    manifest = read_manifest(root)
    episodes = []
    for i in range(manifest.episode_count):
        meta = manifest.episode_meta[i] if i < len(manifest.episode_meta) else {}
        buf = episode_path(root, i).read_bytes()
        episodes.append(decode_episode(buf, manifest.dataset_id, manifest.embodiment_id, meta))
    return manifest, episodes
