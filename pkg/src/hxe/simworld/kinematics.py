"""First-order kinematics for the simulated embodiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hxe.core import HxeError, Pose2D, Pose3D, wrap_yaw


class ActuationError(HxeError):
    pass


@dataclass(frozen=True)
class NavState:
    pose: Pose2D
    v: float = 0.0


@dataclass(frozen=True)
class ArmState:
    theta: tuple[float, ...]
    base: Pose2D = Pose2D(0.0, 0.0, 0.0)
    gripper_closed: bool = False


@dataclass(frozen=True)
class DroneState:
    pose: Pose3D


def step_unicycle(
    s: NavState,
    v: float,
    omega: float,
    dt: float,
    v_max: float = math.inf,
    omega_max: float = math.inf,
) -> NavState:
    if dt <= 0:
        raise ActuationError(f"dt must be positive, got {dt}")
    if abs(v) > v_max + 1e-12 or abs(omega) > omega_max + 1e-12:
        raise ActuationError(f"command (v={v}, omega={omega}) exceeds limits ({v_max}, {omega_max})")
    p = s.pose
    x = p.x + v * math.cos(p.yaw) * dt
    y = p.y + v * math.sin(p.yaw) * dt
    return NavState(Pose2D(x, y, wrap_yaw(p.yaw + omega * dt)), v)


def arm_forward_kinematics(theta, links, base: Pose2D = Pose2D(0.0, 0.0, 0.0)) -> Pose2D:
    """Planar serial chain; the end-effector yaw is the sum of the joint angles."""
    theta = np.asarray(theta, dtype=np.float64)
    links = np.asarray(links, dtype=np.float64)
    if theta.shape != links.shape or theta.size < 2:
        raise ValueError("need matching joint and link vectors with at least two joints")
    cum = base.yaw + np.cumsum(theta)
    x = base.x + float(np.sum(links * np.cos(cum)))
    y = base.y + float(np.sum(links * np.sin(cum)))
    return Pose2D(x, y, base.yaw + float(np.sum(theta)))


def _wrist_reach(links) -> tuple[float, float]:
    l1, l2 = links[0], links[1]
    return abs(l1 - l2), l1 + l2


def arm_inverse_kinematics(
    target: Pose2D, links, base: Pose2D = Pose2D(0.0, 0.0, 0.0), elbow: float = 1.0
) -> tuple[float, ...] | None:
    """Closed-form IK for a 3-link planar arm at a fixed tool yaw.

    Returns None when the target is unreachable.
    """
    l1, l2, l3 = links
    c, s = math.cos(base.yaw), math.sin(base.yaw)
    # target in the arm base frame
    dx, dy = target.x - base.x, target.y - base.y
    tx, ty = c * dx + s * dy, -s * dx + c * dy
    phi = wrap_yaw(target.yaw - base.yaw)
    wx, wy = tx - l3 * math.cos(phi), ty - l3 * math.sin(phi)
    r2 = wx * wx + wy * wy
    cos2 = (r2 - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    if cos2 < -1 - 1e-12 or cos2 > 1 + 1e-12:
        return None
    cos2 = min(1.0, max(-1.0, cos2))
    t2 = elbow * math.acos(cos2)
    t1 = math.atan2(wy, wx) - math.atan2(l2 * math.sin(t2), l1 + l2 * math.cos(t2))
    t3 = phi - t1 - t2
    return (wrap_yaw(t1), wrap_yaw(t2), wrap_yaw(t3))


def clip_to_reach(ee: np.ndarray, delta: np.ndarray, links, tool_yaw: float, base: Pose2D) -> tuple[np.ndarray, bool]:
    """Move ``ee`` along ``delta`` as far as the wrist annulus allows.

    Returns the reached point and whether clipping happened.
    """
    lo, hi = _wrist_reach(links)
    off = links[2] * np.array([math.cos(tool_yaw), math.sin(tool_yaw)])
    w0 = ee - off - base.xy
    target = w0 + delta
    rt = float(np.linalg.norm(target))
    if lo - 1e-12 <= rt <= hi + 1e-12:
        return ee + delta, False
    # largest s in [0, 1] keeping |w0 + s*delta| inside [lo, hi]
    a = float(delta @ delta)
    b = 2.0 * float(w0 @ delta)
    best = 0.0
    for radius in (lo, hi):
        cc = float(w0 @ w0) - radius * radius
        disc = b * b - 4 * a * cc
        if a == 0 or disc < 0:
            continue
        sq = math.sqrt(disc)
        for s in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
            if 0.0 <= s <= 1.0:
                p = np.linalg.norm(w0 + s * delta)
                if lo - 1e-9 <= p <= hi + 1e-9:
                    best = max(best, s)
    return ee + best * delta, True


def step_drone(s: DroneState, delta: np.ndarray, step_max: float) -> DroneState:
    """Holonomic point: delta is (forward, left, up) in the body frame."""
    delta = np.asarray(delta, dtype=np.float64)
    n = float(np.linalg.norm(delta))
    if n > step_max + 1e-12:
        raise ActuationError(f"drone step {n:.4f} exceeds {step_max}")
    p = s.pose
    c, si = math.cos(p.yaw), math.sin(p.yaw)
    return DroneState(
        Pose3D(p.x + c * delta[0] - si * delta[1], p.y + si * delta[0] + c * delta[1], p.z + delta[2], p.yaw)
    )


def set_gripper(s: ArmState, closed: bool) -> ArmState:
    return replace(s, gripper_closed=closed)
