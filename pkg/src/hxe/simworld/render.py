"""Egocentric raster rendering.

Camera frame: rows are depth bins ahead of the camera (row 0 nearest), columns
are lateral bins with column 0 on the far left. Lateral offset 0 falls in the
middle of column ``W // 2``. Cells are square with side ``view_range / H``.
"""

from __future__ import annotations

import math

import numpy as np

from hxe.core import OBJECT_CHANNEL, OBS_SHAPE, OBSTACLE_CHANNEL, EgoObservation, Pose
from hxe.simworld.world import OutOfBounds, World


def cell_size(view_range: float, shape=OBS_SHAPE) -> float:
    return view_range / shape[0]


def cell_of(forward: float, left: float, view_range: float, shape=OBS_SHAPE) -> tuple[int, int] | None:
    """Raster cell holding a camera-frame point, or None if outside the grid."""
    H, W, _ = shape
    b = view_range / H
    r = math.floor(forward / b)
    c = math.floor(W / 2 - left / b + 0.5)
    if 0 <= r < H and 0 <= c < W:
        return r, c
    return None


def _cell_centers(view_range: float, shape) -> tuple[np.ndarray, np.ndarray]:
    H, W, _ = shape
    b = view_range / H
    fwd = (np.arange(H) + 0.5) * b
    left = (W / 2 - np.arange(W)) * b
    F, L = np.meshgrid(fwd, left, indexing="ij")
    return F, L


def render_egocentric(
    world: World,
    camera: Pose,
    fov: float = math.pi,
    view_range: float = 3.0,
    shape: tuple[int, int, int] = OBS_SHAPE,
    timestamp: int = 0,
) -> EgoObservation:
    if not world.in_bounds(camera.x, camera.y):
        raise OutOfBounds(f"camera at ({camera.x:.3f}, {camera.y:.3f}) outside world bounds")
    raster = render_raster(world, camera.x, camera.y, camera.yaw, fov, view_range, shape)
    return EgoObservation(raster, timestamp)


def render_raster(
    world: World, cx: float, cy: float, yaw: float, fov: float, view_range: float, shape=OBS_SHAPE
) -> np.ndarray:
    H, W, C = shape
    raster = np.zeros(shape, dtype=np.float32)
    F, L = _cell_centers(view_range, shape)
    visible = np.abs(np.arctan2(L, F)) <= fov / 2 + 1e-12
    c, s = math.cos(yaw), math.sin(yaw)
    if world.obstacles:
        wx = cx + c * F - s * L
        wy = cy + s * F + c * L
        raster[..., OBSTACLE_CHANNEL] = (world.occupied(wx, wy) & visible).astype(np.float32)
    if world.objects and C > OBJECT_CHANNEL:
        obj = raster[..., OBJECT_CHANNEL]
        for o in world.objects:
            dx, dy = o.x - cx, o.y - cy
            fo, lo = c * dx + s * dy, -s * dx + c * dy
            # cells whose centers fall inside the object disk
            mask = (F - fo) ** 2 + (L - lo) ** 2 <= o.radius**2
            hit = cell_of(fo, lo, view_range, shape)
            if hit is not None:
                mask[hit] = True
            mask &= visible
            if mask.any():
                np.maximum(obj, np.where(mask, np.float32(o.shade), np.float32(0.0)), out=obj)
    return raster
