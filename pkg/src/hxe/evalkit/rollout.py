"""Closed-loop, batched rollouts of an agent on simulated tasks.

All live trials of a task advance in lock step so a learned agent is queried once
per tick for the whole batch. Each trial keeps its own observation history,
collision count and trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hxe.control.actuation import ArbiterState, arbiter_step, execute_manip, waypoint_to_velocity
from hxe.control.topomap import build_topomap, select_subgoal
from hxe.core import ConfigError, Pose2D
from hxe.evalkit.agents import Agent, TrialView
from hxe.simworld.embodiments import get_profile
from hxe.simworld.expert import PlanningError, arm_camera_pose, scripted_expert
from hxe.simworld.kinematics import ArmState, NavState, arm_inverse_kinematics, step_unicycle
from hxe.simworld.render import OutOfBounds, render_egocentric
from hxe.simworld.tasks import ARM_BASE, TaskInstance, TaskSpec
from hxe.simworld.world import check_collision

DEFAULT_EMBODIMENT = {"manipulator": "arm_a", "navigator": "nav_a", "mobile_manipulator": "mobile_a"}


@dataclass
class TrialResult:
    index: int
    success: bool
    any_object: bool
    collisions: int
    steps: int
    grasped: int | None = None
    trajectory: list[tuple[float, float]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"index": self.index, "success": self.success, "any_object": self.any_object,
                "collisions": self.collisions, "steps": self.steps, "grasped": self.grasped}


class _History:
    """Front-padded rolling window of the last ``c`` rasters."""

    def __init__(self, first: np.ndarray, c: int):
        self.frames = [first] * c

    def push(self, raster: np.ndarray) -> None:
        self.frames = self.frames[1:] + [raster]

    def array(self) -> np.ndarray:
        return np.stack(self.frames)


def check_embodiment(task: TaskSpec, embodiment_id: str) -> None:
    kind = get_profile(embodiment_id).kind
    if kind != task.embodiment_kind:
        raise ConfigError(f"task {task.name} needs a {task.embodiment_kind}, {embodiment_id} is a {kind}")


def _object_hits(instance: TaskInstance, xy: np.ndarray, tol: float) -> list[int]:
    return [o.id for o in instance.world.objects if math.hypot(o.x - xy[0], o.y - xy[1]) <= tol]


# ------------------------------------------------------------------ manipulation


def rollout_manip(agent: Agent, task: TaskSpec, indices: list[int], rng, embodiment_id: str = "arm_a",
                  context: int = 3) -> list[TrialResult]:
    check_embodiment(task, embodiment_id)
    profile = get_profile(embodiment_id)
    decoder = agent.decoder_for(embodiment_id)
    links = profile.link_lengths
    instances = [task.instance(i) for i in indices]
    theta, hist, goals, views, results = [], [], [], [], []
    for i, inst in zip(indices, instances):
        base = Pose2D(*inst.extra["arm_base"]) if "arm_base" in inst.extra else ARM_BASE
        th = arm_inverse_kinematics(inst.start, links, base)
        if th is None:
            raise ConfigError(f"trial {i}: start pose unreachable")
        theta.append((np.asarray(th), base))
        first = render_egocentric(inst.world, arm_camera_pose(inst.start, profile), profile.fov, profile.view_range).raster
        hist.append(_History(first, context))
        goals.append(render_egocentric(inst.world, arm_camera_pose(inst.goal, profile), profile.fov, profile.view_range).raster)
        views.append(TrialView(i, inst, inst.start))
        results.append(TrialResult(i, False, False, 0, 0, trajectory=[(inst.start.x, inst.start.y)]))
    live = list(range(len(indices)))
    for t in range(task.max_steps):
        if not live:
            break
        ctx = np.stack([hist[j].array() for j in live])
        blocks = agent.act(ctx, np.stack([goals[j] for j in live]), [views[j] for j in live], rng)
        still = []
        for j, block in zip(live, blocks):
            inst, res, view = instances[j], results[j], views[j]
            th, base = theta[j]
            cmd = execute_manip(block[0], ArmState(tuple(th), base), decoder, links)
            res.steps = t + 1
            target = cmd.ee_target
            moved = cmd.theta is not None
            if moved:
                cam = arm_camera_pose(Pose2D(target[0], target[1], base.yaw), profile)
                if check_collision(inst.world, target[0], target[1], profile.radius) or not inst.world.in_bounds(cam.x, cam.y):
                    res.collisions += 1
                    moved = False
            if moved:
                theta[j] = (np.asarray(cmd.theta), base)
                view.pose = Pose2D(target[0], target[1], base.yaw)
                res.trajectory.append((view.pose.x, view.pose.y))
            view.t = t + 1
            if cmd.gripper_closed:
                hits = _object_hits(inst, np.array([view.pose.x, view.pose.y]), task.tolerance)
                res.any_object = bool(hits)
                res.grasped = inst.target_id if inst.target_id in hits else (hits[0] if hits else None)
                res.success = inst.target_id in hits
                continue
            if res.collisions > task.collision_budget:
                continue
            cam = arm_camera_pose(view.pose, profile)
            hist[j].push(render_egocentric(inst.world, cam, profile.fov, profile.view_range, timestamp=t + 1).raster)
            still.append(j)
        live = still
    return results


# ------------------------------------------------------------------ navigation


@dataclass
class _NavTrial:
    instance: TaskInstance
    state: NavState
    topomap: object
    node_rasters: np.ndarray
    recorded_steps: int


def prepare_nav_trial(task: TaskSpec, index: int, profile) -> _NavTrial:
    """Record the expert traversal that becomes this trial's map."""
    inst = task.instance(index)
    traversal = scripted_expert(inst, profile, seed=index)
    tm = build_topomap(traversal, 1, f"{task.name}-{task.seed}-{index}")
    return _NavTrial(inst, NavState(inst.start), tm, tm.rasters(), traversal.length - 1)


def rollout_nav(agent: Agent, task: TaskSpec, indices: list[int], rng, embodiment_id: str = "nav_a",
                context: int = 3, lookahead: int = 2, d_max: float = 30.0,
                max_steps: int | None = None, trials: list[_NavTrial] | None = None) -> list[TrialResult]:
    """Map-following navigation: localize against the recorded map, drive at the selected subgoal.

    Success means coming within ``task.tolerance`` of the final node. ``max_steps``
    overrides the task limit (a callable receives the recorded traversal length).
    """
    check_embodiment(task, embodiment_id)
    profile = get_profile(embodiment_id)
    decoder = agent.decoder_for(embodiment_id)
    trials = trials if trials is not None else [prepare_nav_trial(task, i, profile) for i in indices]
    hist, views, results, limits = [], [], [], []
    for i, tr in zip(indices, trials):
        first = render_egocentric(tr.instance.world, tr.instance.start, profile.fov, profile.view_range).raster
        hist.append(_History(first, context))
        views.append(TrialView(i, tr.instance, tr.instance.start, extra={"node_poses": tr.topomap.poses}))
        results.append(TrialResult(i, False, False, 0, 0, trajectory=[(tr.instance.start.x, tr.instance.start.y)]))
        limits.append(max_steps(tr.recorded_steps) if callable(max_steps) else (max_steps or task.max_steps))
    live = list(range(len(trials)))
    t = 0
    while live:
        ctx = np.stack([hist[j].array() for j in live])
        dists = agent.distances(ctx, [trials[j].node_rasters for j in live], [views[j] for j in live])
        goals = []
        for j, d in zip(live, dists):
            _, sub = select_subgoal(d, lookahead, d_max)
            views[j].subgoal_pose = trials[j].topomap.poses[sub]
            views[j].extra["subgoal"] = sub
            goals.append(trials[j].node_rasters[sub])
        blocks = agent.act(ctx, np.stack(goals), [views[j] for j in live], rng)
        still = []
        for j, block in zip(live, blocks):
            tr, res, view = trials[j], results[j], views[j]
            v, w = waypoint_to_velocity(block[agent.nav_row], agent.nav_gains, (profile.v_max, profile.omega_max), decoder)
            nxt = step_unicycle(tr.state, v, w, 0.25, profile.v_max, profile.omega_max)
            p = nxt.pose
            if check_collision(tr.instance.world, p.x, p.y, profile.radius):
                res.collisions += 1
                nxt = NavState(Pose2D(tr.state.pose.x, tr.state.pose.y, p.yaw))
            tr.state = nxt
            view.pose = nxt.pose
            view.t = t + 1
            res.steps = t + 1
            res.trajectory.append((nxt.pose.x, nxt.pose.y))
            final = tr.topomap.poses[-1]
            if math.hypot(final.x - nxt.pose.x, final.y - nxt.pose.y) <= task.tolerance:
                res.success = res.any_object = True
                continue
            if res.collisions > task.collision_budget or t + 1 >= limits[j]:
                continue
            hist[j].push(render_egocentric(tr.instance.world, nxt.pose, profile.fov, profile.view_range, timestamp=t + 1).raster)
            still.append(j)
        live = still
        t += 1
    return results


# ------------------------------------------------------------------ mobile manipulation


def rollout_mobile(agent: Agent, task: TaskSpec, indices: list[int], rng, nav_embodiment: str = "nav_a",
                   arm_embodiment: str = "arm_a", context: int = 3, tau: float = 0.05, h: int = 3) -> list[TrialResult]:
    """Base and arm share one policy; both cameras are queried every tick and the arbiter picks.

    The base drives toward the nav-camera goal image taken at the hand-off pose.
    Once the arbiter latches to the arm, the base freezes and the arm reaches
    for the object shown in the wrist-camera goal image.
    """
    check_embodiment(task, "mobile_a")
    mob = get_profile("mobile_a")
    nav_p, arm_p = get_profile(nav_embodiment), get_profile(arm_embodiment)
    nav_dec, arm_dec = agent.decoder_for(nav_embodiment), agent.decoder_for(arm_embodiment)
    zero = nav_dec.zero_motion()
    links = arm_p.link_lengths
    results = []
    for i in indices:
        inst = task.instance(i)
        world = inst.world
        base = NavState(inst.start)
        base_goal = Pose2D(*inst.extra["base_goal"])
        arb = ArbiterState(tau=tau, h=h)
        nav_goal = render_egocentric(world, base_goal, nav_p.fov, nav_p.view_range).raster
        nav_hist = _History(render_egocentric(world, base.pose, nav_p.fov, nav_p.view_range).raster, context)
        res = TrialResult(i, False, False, 0, 0, trajectory=[(base.pose.x, base.pose.y)])
        theta = ee = arm_hist = arm_goal = None
        for t in range(task.max_steps):
            res.steps = t + 1
            if arb.mode == "base":
                view = TrialView(i, inst, base.pose, t)
                block = agent.act(nav_hist.array()[None], nav_goal[None], [view], rng)[0]
                arb, mode = arbiter_step(arb, block[agent.nav_row], zero)
                if mode == "base":
                    v, w = waypoint_to_velocity(block[agent.nav_row], agent.nav_gains, (mob.v_max, mob.omega_max), nav_dec)
                    nxt = step_unicycle(base, v, w, 0.25, mob.v_max, mob.omega_max)
                    if check_collision(world, nxt.pose.x, nxt.pose.y, mob.radius):
                        res.collisions += 1
                        nxt = NavState(Pose2D(base.pose.x, base.pose.y, nxt.pose.yaw))
                    base = nxt
                    res.trajectory.append((base.pose.x, base.pose.y))
                    nav_hist.push(render_egocentric(world, base.pose, nav_p.fov, nav_p.view_range).raster)
                    continue
                # hand-off: mount the arm on the stopped base, tool pointing along the heading
                bp = base.pose
                ee = Pose2D(bp.x + 0.4 * math.cos(bp.yaw), bp.y + 0.4 * math.sin(bp.yaw), bp.yaw)
                theta = arm_inverse_kinematics(ee, links, bp)
                if theta is None:
                    break
                o = next(ob for ob in world.objects if ob.id == inst.target_id)
                try:
                    arm_goal = render_egocentric(world, arm_camera_pose(Pose2D(o.x, o.y, bp.yaw), arm_p), arm_p.fov, arm_p.view_range).raster
                    arm_hist = _History(render_egocentric(world, arm_camera_pose(ee, arm_p), arm_p.fov, arm_p.view_range).raster, context)
                except OutOfBounds:
                    break
            view = TrialView(i, inst, ee, t)
            block = agent.act(arm_hist.array()[None], arm_goal[None], [view], rng)[0]
            cmd = execute_manip(block[0], ArmState(tuple(theta), base.pose), arm_dec, links)
            if cmd.theta is not None and not check_collision(world, cmd.ee_target[0], cmd.ee_target[1], arm_p.radius):
                theta = cmd.theta
                ee = Pose2D(cmd.ee_target[0], cmd.ee_target[1], base.pose.yaw)
            elif cmd.theta is not None:
                res.collisions += 1
            if cmd.gripper_closed:
                hits = _object_hits(inst, np.array([ee.x, ee.y]), task.tolerance)
                res.any_object = bool(hits)
                res.success = inst.target_id in hits
                res.grasped = inst.target_id if res.success else (hits[0] if hits else None)
                break
            try:
                arm_hist.push(render_egocentric(world, arm_camera_pose(ee, arm_p), arm_p.fov, arm_p.view_range).raster)
            except OutOfBounds:
                break
        results.append(res)
    return results


def rollout(agent: Agent, task: TaskSpec, indices: list[int], rng, embodiment_id: str | None = None, **kw) -> list[TrialResult]:
    emb = embodiment_id or DEFAULT_EMBODIMENT[task.embodiment_kind]
    if task.embodiment_kind == "manipulator":
        return rollout_manip(agent, task, indices, rng, emb, **kw)
    if task.embodiment_kind == "navigator":
        return rollout_nav(agent, task, indices, rng, emb, **kw)
    return rollout_mobile(agent, task, indices, rng, **kw)


__all__ = ["TrialResult", "rollout", "rollout_manip", "rollout_nav", "rollout_mobile", "prepare_nav_trial",
           "check_embodiment", "PlanningError"]
