"""Deployment-time controllers."""

from hxe.control.actuation import (
    ArbiterState,
    ArmCommand,
    arbiter_step,
    decode_waypoint,
    execute_manip,
    translation_magnitude,
    waypoint_to_velocity,
)
from hxe.control.decode import ActionDecoder
from hxe.control.topomap import (
    TopoMap,
    build_topomap,
    localize_and_select,
    model_distance_fn,
    pose_distance_fn,
    select_subgoal,
)

__all__ = [
    "ArbiterState", "ArmCommand", "arbiter_step", "decode_waypoint", "execute_manip",
    "translation_magnitude", "waypoint_to_velocity", "ActionDecoder", "TopoMap", "build_topomap",
    "localize_and_select", "model_distance_fn", "pose_distance_fn", "select_subgoal",
]
