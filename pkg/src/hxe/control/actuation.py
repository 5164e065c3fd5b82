"""Turning unified action predictions into commands: base velocities, arm targets, and the base/arm arbiter."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from hxe.control.decode import ActionDecoder
from hxe.core import DT, GRIPPER_DIM, TRANSLATION_DIMS, Pose2D, UnifiedAction
from hxe.simworld.kinematics import ArmState, arm_forward_kinematics, arm_inverse_kinematics, clip_to_reach

FORWARD_EPS = 1e-3
STOP_RADIUS = 0.05
ARBITER_TAU = 0.05
ARBITER_H = 3
# steering toward the last waypoint of a 5-step chunk: reach it in ~5 ticks
NAV_GAINS = (1.0 / (5 * DT), 1.5)


def _components(a) -> np.ndarray:
    return np.asarray(a.v if isinstance(a, UnifiedAction) else a, dtype=np.float64)


def decode_waypoint(a, decoder: ActionDecoder | None = None) -> tuple[float, float]:
    """(forward, left) in meters. Without a decoder the scale is unity: forward = -a[2], left = a[1]."""
    u = _components(a)
    if decoder is None:
        return float(-u[2]), float(u[1])
    fwd, left = decoder.to_physical(u)[:2]
    return float(fwd), float(left)


def waypoint_to_velocity(
    a,
    gains: tuple[float, float] = (1.0, 1.0),
    limits: tuple[float, float] = (math.inf, math.inf),
    decoder: ActionDecoder | None = None,
    stop_radius: float = STOP_RADIUS,
) -> tuple[float, float]:
    forward, left = decode_waypoint(a, decoder)
    if math.hypot(forward, left) < stop_radius:
        return 0.0, 0.0
    k_v, k_w = gains
    v_max, w_max = limits
    v = float(np.clip(k_v * forward, -v_max, v_max))
    w = float(np.clip(k_w * math.atan2(left, max(forward, FORWARD_EPS)), -w_max, w_max))
    return v, w


@dataclass(frozen=True)
class ArmCommand:
    ee_target: np.ndarray
    gripper_closed: bool
    clipped: bool
    theta: np.ndarray | None


def execute_manip(
    a, state: ArmState, decoder: ActionDecoder | None, links, tool_yaw: float = 0.0
) -> ArmCommand:
    """Delta-Cartesian step in the tool frame, clipped to the reachable annulus, solved by IK.

    The gripper closes iff a[6] < 0, read from the unified action before any scaling.
    """
    u = _components(a)
    phys = decoder.to_physical(u) if decoder is not None else np.array([-u[2], u[1], u[0], *u[3:6], u[6]])
    fwd, left = float(phys[0]), float(phys[1])
    yaw = state.base.yaw + tool_yaw
    c, s = math.cos(yaw), math.sin(yaw)
    delta = np.array([c * fwd - s * left, s * fwd + c * left])
    ee = arm_forward_kinematics(state.theta, links, state.base)
    target, clipped = clip_to_reach(np.array([ee.x, ee.y]), delta, links, yaw, state.base)
    theta = arm_inverse_kinematics(Pose2D(target[0], target[1], yaw), links, state.base)
    return ArmCommand(target, bool(u[GRIPPER_DIM] < 0), clipped, theta)


@dataclass(frozen=True)
class ArbiterState:
    mode: str = "base"
    consecutive_small: int = 0
    tau: float = ARBITER_TAU
    h: int = ARBITER_H

    def __post_init__(self) -> None:
        if self.mode not in ("base", "arm"):
            raise ValueError(f"unknown arbiter mode {self.mode!r}")


def translation_magnitude(a, zero=None) -> float:
    """L2 norm of the translation dims, measured from ``zero`` (the encoding of no motion)."""
    u = _components(a)[list(TRANSLATION_DIMS)]
    if zero is not None:
        u = u - np.asarray(zero, dtype=np.float64)[list(TRANSLATION_DIMS)]
    return float(np.linalg.norm(u))


def arbiter_step(s: ArbiterState, base_action, zero=None) -> tuple[ArbiterState, str]:
    """Count consecutive small base actions; after ``h`` of them hand over to the arm for good."""
    if s.mode == "arm":
        return s, "arm"
    if translation_magnitude(base_action, zero) < s.tau:
        n = s.consecutive_small + 1
    else:
        n = 0
    if n >= s.h:
        s = replace(s, mode="arm", consecutive_small=s.h)
    else:
        s = replace(s, consecutive_small=n)
    return s, s.mode

