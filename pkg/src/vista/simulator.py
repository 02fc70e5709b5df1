"""Deterministic fixed-step scenario execution.

Each step advances the world from t = i*dt to (i+1)*dt:
triggers are evaluated against the current ego state, newly or already
active actors replay their compiled trajectories (inactive ones wait at
their start pose), traffic lights and weather follow their schedules as
pure functions of time, and the ego integrates unicycle kinematics under
the policy's command with its speed slewed at a bounded rate. One log
row per entity is recorded at every step time before the update, so the
logged actor poses are exactly the trajectory samples and sim_time is
exactly i*dt by step counting.

A run ends when the ego center comes within the goal radius of the
mission destination (reached) or the time limit elapses (timed out).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .config import SimConfig
from .errors import PolicyError
from .geometry import BodyGeometry, Pose2, segments_intersect, wrap_angle
from .maneuvers import compile_actor
from .policies import (
    Command,
    EgoPolicy,
    Observation,
    ObservedEntity,
    ObservedLight,
)
from .scenario import ActorSpec, Scenario, Trigger
from .simlog import SimLog, StepRecord
from .smoothing import TimedTrajectory


@dataclass(frozen=True)
class EntityState:
    pose: Pose2
    speed: float
    body: BodyGeometry


@dataclass(frozen=True)
class ActorRuntime:
    spec: ActorSpec
    trajectory: TimedTrajectory
    state: EntityState
    active: bool = False
    playback_step: int = 0


@dataclass(frozen=True)
class WorldState:
    sim_time: float
    step_index: int
    ego: EntityState
    actors: dict[str, ActorRuntime]
    light_states: dict[str, str]
    active_weather: dict[str, float] | None
    scenario: Scenario = field(repr=False)
    # Ego position one step earlier; line-crossing triggers test the swept segment.
    prev_ego_pos: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class RunResult:
    log: SimLog
    completion: str  # reached_destination | timed_out
    completion_time: float | None
    error: str | None = None


def _trigger_fired(
    trigger: Trigger,
    sim_time: float,
    ego: EntityState,
    prev_ego_pos: tuple[float, float],
    actor_start: Pose2,
) -> bool:
    if trigger.kind == "immediate":
        return True
    if trigger.kind == "at_time":
        return sim_time >= trigger.time
    if trigger.kind == "ego_within_radius":
        d = math.hypot(ego.pose.x - actor_start.x, ego.pose.y - actor_start.y)
        return d <= trigger.radius
    if trigger.kind == "ego_crosses_line":
        assert trigger.line is not None
        return segments_intersect(
            prev_ego_pos, (ego.pose.x, ego.pose.y), trigger.line[0], trigger.line[1]
        )
    return False


def _light_states(scenario: Scenario, t: float) -> dict[str, str]:
    return {tl.light_id: tl.state_at(t) for tl in scenario.traffic_lights}


def _active_weather(scenario: Scenario, t: float) -> dict[str, float] | None:
    for w in scenario.weather_windows:
        if w.start <= t < w.end:
            return w.params
    return None


def initial_state(scenario: Scenario, dt: float, config: SimConfig) -> WorldState:
    actors = {}
    for spec in scenario.actors:
        trajectory = compile_actor(spec, dt)
        first = trajectory.samples[0]
        actors[spec.actor_id] = ActorRuntime(
            spec=spec,
            trajectory=trajectory,
            state=EntityState(first.pose, 0.0, spec.body),
        )
    ego = EntityState(
        scenario.ego_start, 0.0, BodyGeometry(config.ego_length, config.ego_width)
    )
    return WorldState(
        sim_time=0.0,
        step_index=0,
        ego=ego,
        actors=actors,
        light_states=_light_states(scenario, 0.0),
        active_weather=_active_weather(scenario, 0.0),
        scenario=scenario,
        prev_ego_pos=(scenario.ego_start.x, scenario.ego_start.y),
    )


def observe(state: WorldState) -> Observation:
    entities = [
        ObservedEntity(aid, "actor", rt.state.pose, rt.state.speed, rt.state.body)
        for aid, rt in sorted(state.actors.items())
    ]
    entities += [
        ObservedEntity(o.object_id, "static", o.pose, 0.0, o.body)
        for o in state.scenario.static_objects
    ]
    lights = [
        ObservedLight(tl.light_id, state.light_states[tl.light_id], tl.stop_line)
        for tl in state.scenario.traffic_lights
    ]
    return Observation(
        sim_time=state.sim_time,
        ego_pose=state.ego.pose,
        ego_speed=state.ego.speed,
        ego_body=state.ego.body,
        entities=tuple(entities),
        lights=tuple(lights),
        destination=state.scenario.ego_destination,
        road_speed_limit=state.scenario.road_speed_limit,
    )


def step(state: WorldState, policy: EgoPolicy, dt: float, config: SimConfig) -> WorldState:
    """Advance the world by one step; pure in (state, policy state)."""
    scenario = state.scenario
    next_index = state.step_index + 1
    next_time = next_index * dt

    actors: dict[str, ActorRuntime] = {}
    for aid, rt in state.actors.items():
        active = rt.active or _trigger_fired(
            rt.spec.trigger, state.sim_time, state.ego, state.prev_ego_pos, rt.spec.start_pose
        )
        if active:
            playback = rt.playback_step + 1 if rt.active else 1
            sample = rt.trajectory.sample_at_step(playback)
            actors[aid] = replace(
                rt,
                active=True,
                playback_step=playback,
                state=EntityState(sample.pose, sample.speed, rt.spec.body),
            )
        else:
            actors[aid] = rt

    try:
        command = policy.decide(observe(state))
    except Exception as e:  # surfaced as a PolicyError by run_scenario
        raise PolicyError(f"policy {policy.name!r} failed at t={state.sim_time}: {e}") from e

    ego = _integrate_ego(state.ego, command, dt, config)
    return WorldState(
        sim_time=next_time,
        step_index=next_index,
        ego=ego,
        actors=actors,
        light_states=_light_states(scenario, next_time),
        active_weather=_active_weather(scenario, next_time),
        scenario=scenario,
        prev_ego_pos=(state.ego.pose.x, state.ego.pose.y),
    )


def _integrate_ego(ego: EntityState, command: Command, dt: float, config: SimConfig) -> EntityState:
    target = max(command.target_speed, 0.0)
    dv = max(-config.a_max * dt, min(config.a_max * dt, target - ego.speed))
    speed = max(ego.speed + dv, 0.0)
    heading = ego.pose.heading
    x = ego.pose.x + speed * dt * math.cos(heading)
    y = ego.pose.y + speed * dt * math.sin(heading)
    heading = wrap_angle(heading + command.curvature * speed * dt)
    return EntityState(Pose2(x, y, heading), speed, ego.body)


def _log_rows(state: WorldState) -> list[StepRecord]:
    t = state.sim_time
    rows = [
        StepRecord(
            t, "ego", "ego",
            state.ego.pose.x, state.ego.pose.y, state.ego.pose.heading,
            state.ego.speed, state.ego.body.length, state.ego.body.width,
        )
    ]
    for aid in sorted(state.actors):
        s = state.actors[aid].state
        rows.append(
            StepRecord(t, aid, "actor", s.pose.x, s.pose.y, s.pose.heading,
                       s.speed, s.body.length, s.body.width)
        )
    for obj in sorted(state.scenario.static_objects, key=lambda o: o.object_id):
        rows.append(
            StepRecord(t, obj.object_id, "static", obj.pose.x, obj.pose.y,
                       obj.pose.heading, 0.0, obj.body.length, obj.body.width)
        )
    return rows


def run_scenario(
    scenario: Scenario,
    policy: EgoPolicy,
    dt: float = 0.1,
    config: SimConfig | None = None,
) -> RunResult:
    """Execute one scenario to completion or timeout."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    config = config or SimConfig(dt=dt)
    state = initial_state(scenario, dt, config)
    records: list[StepRecord] = []
    dest = scenario.ego_destination
    error: str | None = None
    completion = "timed_out"
    completion_time: float | None = None

    while True:
        records.extend(_log_rows(state))
        if math.hypot(state.ego.pose.x - dest[0], state.ego.pose.y - dest[1]) <= config.r_goal:
            completion = "reached_destination"
            completion_time = state.sim_time
            break
        if state.sim_time >= scenario.time_limit:
            completion = "timed_out"
            break
        try:
            state = step(state, policy, dt, config)
        except PolicyError as e:
            error = str(e)
            completion = "timed_out"
            break
    return RunResult(SimLog(tuple(records)), completion, completion_time, error)
