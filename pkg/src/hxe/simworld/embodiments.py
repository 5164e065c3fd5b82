"""Registry of simulated embodiments.

Manipulator experts produce a physical end-effector delta in the order
(forward, left, up, roll, pitch, yaw, gripper). Each manipulator profile then
scrambles that vector into its own native layout via ``native_perm`` and
``native_signs`` (native[i] = signs[i] * physical[perm[i]]), which is what a
dataset stores. Alignment maps undo this per dataset.
"""

from __future__ import annotations

import math

from hxe.core import ConfigError, EmbodimentProfile

ARM_LINKS = (0.55, 0.45, 0.15)
ARM_VIEW_RANGE = 1.6
NAV_VIEW_RANGE = 3.0

PROFILES: dict[str, EmbodimentProfile] = {
    "nav_a": EmbodimentProfile(
        "nav_a", "navigator", 2, "nav_fwd_left",
        v_max=0.6, omega_max=2.0, radius=0.15, view_range=NAV_VIEW_RANGE, fov=math.pi,
    ),
    "nav_b": EmbodimentProfile(
        "nav_b", "navigator", 2, "nav_fwd_left",
        v_max=0.45, omega_max=1.6, radius=0.2, view_range=NAV_VIEW_RANGE, fov=math.pi,
    ),
    "arm_a": EmbodimentProfile(
        "arm_a", "manipulator", 7, "manip_cart7",
        link_lengths=ARM_LINKS, joint_limit=math.pi, camera_offset=0.25, camera_tilt=math.pi / 2,
        step_max=0.05, radius=0.03, view_range=ARM_VIEW_RANGE, fov=math.pi,
        native_perm=(0, 1, 2, 3, 4, 5, 6), native_signs=(1, 1, 1, 1, 1, 1, 1),
    ),
    # stores (right, forward, up, yaw, pitch, roll, gripper)
    "arm_b": EmbodimentProfile(
        "arm_b", "manipulator", 7, "manip_cart7",
        link_lengths=ARM_LINKS, joint_limit=math.pi, camera_offset=0.25, camera_tilt=math.pi / 2,
        step_max=0.05, radius=0.03, view_range=ARM_VIEW_RANGE, fov=math.pi,
        native_perm=(1, 0, 2, 5, 4, 3, 6), native_signs=(-1, 1, 1, 1, 1, 1, 1),
    ),
    "drone_a": EmbodimentProfile(
        "drone_a", "drone", 3, "drone_xyz",
        step_max=0.12, radius=0.12, view_range=NAV_VIEW_RANGE, fov=math.pi,
    ),
    "mobile_a": EmbodimentProfile(
        "mobile_a", "mobile_manipulator", 7, "manip_cart7",
        link_lengths=ARM_LINKS, joint_limit=math.pi, camera_offset=0.25, camera_tilt=math.pi / 2,
        v_max=0.45, omega_max=1.6, step_max=0.05, radius=0.25, view_range=ARM_VIEW_RANGE, fov=math.pi,
        native_perm=(0, 1, 2, 3, 4, 5, 6), native_signs=(1, 1, 1, 1, 1, 1, 1),
    ),
}


def get_profile(embodiment_id: str) -> EmbodimentProfile:
    try:
        return PROFILES[embodiment_id]
    except KeyError:
        raise ConfigError(f"unknown embodiment {embodiment_id!r}; known: {sorted(PROFILES)}") from None


def domain_of(profile: EmbodimentProfile) -> str:
    return "navigation" if profile.kind in ("navigator", "drone") else "manipulation"
