"""Deterministic simulators, egocentric rendering and scripted experts."""

from hxe.simworld.embodiments import PROFILES, domain_of, get_profile
from hxe.simworld.expert import PlanningError, arm_camera_pose, plan_path, scripted_expert
from hxe.simworld.kinematics import (
    ActuationError,
    ArmState,
    DroneState,
    NavState,
    arm_forward_kinematics,
    arm_inverse_kinematics,
    step_unicycle,
)
from hxe.simworld.render import cell_of, render_egocentric
from hxe.simworld.tasks import TASK_NAMES, TaskInstance, TaskSpec
from hxe.simworld.world import Circle, OutOfBounds, Rect, TaskObject, World, check_collision

__all__ = [
    "PROFILES", "domain_of", "get_profile", "PlanningError", "arm_camera_pose", "plan_path",
    "scripted_expert", "ActuationError", "ArmState", "DroneState", "NavState",
    "arm_forward_kinematics", "arm_inverse_kinematics", "step_unicycle", "cell_of",
    "render_egocentric", "TASK_NAMES", "TaskInstance", "TaskSpec", "Circle", "OutOfBounds",
    "Rect", "TaskObject", "World", "check_collision",
]
