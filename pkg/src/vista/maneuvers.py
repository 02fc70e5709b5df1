"""Semantic maneuver compilation.

Actors are scripted at two levels. Level-two maneuvers are the authoring
vocabulary (lane change, cut-in, overtake, ...); each expands into a fixed
sequence of level-one atoms (straight, turn, swerve leg, stop-and-hold).
Every atom converts into exactly one key-waypoint expressed relative to
the previous waypoint's pose, so a script can be written without touching
global coordinates; the start pose anchors the chain in the map frame.

The full expansion table is documented in docs/maneuvers.md and must stay
in sync with `_EXPANSIONS` below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping

from .errors import InvalidParams, UnsupportedManeuver
from .geometry import Pose2
from .smoothing import KeyWaypoint, TimedTrajectory, smooth

if TYPE_CHECKING:
    from .scenario import ActorSpec

L1_KINDS = ("straight", "turn", "swerve_leg", "stop_hold")
L2_KINDS = (
    "drive_straight",
    "lane_change",
    "swerve",
    "cut_in",
    "overtake",
    "turn_left",
    "turn_right",
    "pull_over_stop",
    "park_leg",
)

# Fixed leg lengths used by composite expansions (meters).
CUT_IN_SWERVE_LENGTH = 15.0
CUT_IN_FOLLOW_LENGTH = 10.0
OVERTAKE_CHANGE_LENGTH = 15.0
PULL_OVER_LENGTH = 12.0


@dataclass(frozen=True)
class ManeuverL1:
    """Atomic maneuver; kind-specific parameters, all SI."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ManeuverL2:
    """Composite maneuver from the authoring vocabulary."""

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)


def _req(params: Mapping[str, float], name: str, kind: str) -> float:
    if name not in params:
        raise InvalidParams(f"{kind}: missing parameter {name!r}")
    v = params[name]
    if not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InvalidParams(f"{kind}: parameter {name!r} must be a finite number")
    return float(v)


def _opt(params: Mapping[str, float], name: str, default: float) -> float:
    v = params.get(name, default)
    if not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InvalidParams(f"parameter {name!r} must be a finite number")
    return float(v)


def straight(length: float, speed: float) -> ManeuverL1:
    return ManeuverL1("straight", {"length": length, "target_speed": speed})


def turn(radius: float, angle: float, speed: float) -> ManeuverL1:
    return ManeuverL1("turn", {"radius": radius, "angle": angle, "target_speed": speed})


def swerve_leg(length: float, offset: float, speed: float) -> ManeuverL1:
    return ManeuverL1(
        "swerve_leg",
        {"length": length, "lateral_offset": offset, "target_speed": speed},
    )


def stop_hold(duration: float) -> ManeuverL1:
    return ManeuverL1("stop_hold", {"duration": duration})


def _expand_drive_straight(p):
    return [straight(_req(p, "length", "drive_straight"), _req(p, "speed", "drive_straight"))]


def _expand_lane_change(p):
    return [
        swerve_leg(
            _req(p, "length", "lane_change"),
            _req(p, "lateral", "lane_change"),
            _req(p, "speed", "lane_change"),
        )
    ]


def _expand_swerve(p):
    length = _req(p, "length", "swerve")
    lateral = _req(p, "lateral", "swerve")
    speed = _req(p, "speed", "swerve")
    # Out and back: the net lateral displacement is zero.
    return [
        swerve_leg(length / 2.0, lateral, speed),
        swerve_leg(length / 2.0, -lateral, speed),
    ]


def _expand_cut_in(p):
    advance = _req(p, "advance", "cut_in")
    lateral = _req(p, "lateral", "cut_in")
    speed = _req(p, "speed", "cut_in")
    cut = _opt(p, "cut_length", CUT_IN_SWERVE_LENGTH)
    follow = _opt(p, "follow_length", CUT_IN_FOLLOW_LENGTH)
    # Positive lateral means the actor sits that far left of the target
    # lane and cuts right (negative offset) into it.
    return [
        straight(advance, speed),
        swerve_leg(cut, -lateral, speed),
        straight(follow, speed),
    ]


def _expand_overtake(p):
    length = _req(p, "length", "overtake")
    lateral = _req(p, "lateral", "overtake")
    speed = _req(p, "speed", "overtake")
    change = _opt(p, "change_length", OVERTAKE_CHANGE_LENGTH)
    return [
        swerve_leg(change, lateral, speed),
        straight(length, speed),
        swerve_leg(change, -lateral, speed),
    ]


def _expand_turn(p, kind: str, sign: float):
    radius = _req(p, "radius", kind)
    speed = _req(p, "speed", kind)
    angle = _opt(p, "angle", math.pi / 2.0)
    return [turn(radius, sign * abs(angle), speed)]


def _expand_pull_over_stop(p):
    advance = _req(p, "advance", "pull_over_stop")
    lateral = _req(p, "lateral", "pull_over_stop")
    speed = _req(p, "speed", "pull_over_stop")
    duration = _req(p, "duration", "pull_over_stop")
    pull = _opt(p, "pull_length", PULL_OVER_LENGTH)
    legs = [straight(advance, speed)] if advance > 0 else []
    return legs + [swerve_leg(pull, lateral, speed), stop_hold(duration)]


def _expand_park_leg(p):
    length = _req(p, "length", "park_leg")
    lateral = _req(p, "lateral", "park_leg")
    speed = _req(p, "speed", "park_leg")
    duration = _req(p, "duration", "park_leg")
    return [swerve_leg(length, lateral, speed), stop_hold(duration)]


_EXPANSIONS = {
    "drive_straight": _expand_drive_straight,
    "lane_change": _expand_lane_change,
    "swerve": _expand_swerve,
    "cut_in": _expand_cut_in,
    "overtake": _expand_overtake,
    "turn_left": lambda p: _expand_turn(p, "turn_left", +1.0),
    "turn_right": lambda p: _expand_turn(p, "turn_right", -1.0),
    "pull_over_stop": _expand_pull_over_stop,
    "park_leg": _expand_park_leg,
}


def _validate_l1(m: ManeuverL1):
    p = m.params
    if m.kind == "straight":
        if not _req(p, "length", m.kind) > 0:
            raise InvalidParams("straight: length must be > 0")
    elif m.kind == "turn":
        if not _req(p, "radius", m.kind) > 0:
            raise InvalidParams("turn: radius must be > 0")
        if _req(p, "angle", m.kind) == 0.0:
            raise InvalidParams("turn: angle must be nonzero")
    elif m.kind == "swerve_leg":
        if not _req(p, "length", m.kind) > 0:
            raise InvalidParams("swerve_leg: length must be > 0")
        _req(p, "lateral_offset", m.kind)
    elif m.kind == "stop_hold":
        if _req(p, "duration", m.kind) < 0:
            raise InvalidParams("stop_hold: duration must be >= 0")
    else:
        raise UnsupportedManeuver(f"unknown level-one maneuver {m.kind!r}")
    if m.kind != "stop_hold" and _req(p, "target_speed", m.kind) < 0:
        raise InvalidParams(f"{m.kind}: target_speed must be >= 0")


def expand_l2(m: ManeuverL2) -> list[ManeuverL1]:
    """Expand one level-two maneuver into its level-one sequence."""
    try:
        fn = _EXPANSIONS[m.kind]
    except KeyError:
        raise UnsupportedManeuver(f"unknown level-two maneuver {m.kind!r}") from None
    atoms = fn(m.params)
    for atom in atoms:
        _validate_l1(atom)
    return atoms


def l1_to_keywaypoint(m: ManeuverL1) -> KeyWaypoint:
    """Convert one atom into a key-waypoint relative to the previous pose."""
    _validate_l1(m)
    p = m.params
    if m.kind == "straight":
        return KeyWaypoint(Pose2(p["length"], 0.0, 0.0), p["target_speed"])
    if m.kind == "swerve_leg":
        return KeyWaypoint(Pose2(p["length"], p["lateral_offset"], 0.0), p["target_speed"])
    if m.kind == "turn":
        r, theta = p["radius"], p["angle"]
        x = r * math.sin(abs(theta))
        y = math.copysign(r * (1.0 - math.cos(theta)), theta)
        return KeyWaypoint(Pose2(x, y, theta), p["target_speed"])
    # stop_hold: stay in place at zero speed for the dwell duration.
    return KeyWaypoint(Pose2(0.0, 0.0, 0.0), 0.0, hold=p["duration"])


def local_to_global(start: Pose2, locals_: list[KeyWaypoint]) -> list[KeyWaypoint]:
    """Resolve chained pose-relative waypoints into the map frame."""
    out: list[KeyWaypoint] = []
    current = start
    for kw in locals_:
        current = current.compose(kw.pose)
        out.append(KeyWaypoint(current, kw.speed, kw.hold))
    return out


def compile_script(maneuvers: list[ManeuverL2]) -> list[ManeuverL1]:
    """Expand a full level-two script into a flat level-one sequence."""
    if not maneuvers:
        raise InvalidParams("maneuver script is empty")
    atoms: list[ManeuverL1] = []
    for m in maneuvers:
        atoms.extend(expand_l2(m))
    return atoms


def compile_actor(spec: "ActorSpec", dt: float) -> TimedTrajectory:
    """Compile an actor script into the dense trajectory it will replay.

    Vehicles run the maneuver pipeline (expand, convert, anchor, smooth).
    Pedestrian-style waypoint scripts are interpolated linearly at a
    constant speed per leg.
    """
    if not dt > 0:
        raise InvalidParams(f"dt must be > 0, got {dt}")
    if spec.waypoints:
        return _interpolate_waypoints(spec, dt)
    atoms = compile_script(list(spec.maneuvers))
    locals_ = [l1_to_keywaypoint(a) for a in atoms]
    first_speed = locals_[0].speed
    kws = [KeyWaypoint(spec.start_pose, first_speed)]
    kws.extend(local_to_global(spec.start_pose, locals_))
    return smooth(kws, spec.speed_cap, dt)


V_FLOOR_PED = 0.1  # m/s, keeps zero-speed pedestrian legs well-defined
DEFAULT_WALK_SPEED = 1.4  # m/s


def _interpolate_waypoints(spec: "ActorSpec", dt: float) -> TimedTrajectory:
    """Constant-speed straight legs through start-pose-relative waypoints.

    A waypoint's speed applies to the leg leaving it; its hold inserts a
    dwell on arrival. A leading waypoint at the local origin just sets the
    initial leg speed.
    """
    from .smoothing import TrajectorySample

    # Nodes: [local_x, local_y, leg_speed, hold]; implicit origin first.
    nodes: list[list[float]] = [[0.0, 0.0, DEFAULT_WALK_SPEED, 0.0]]
    for wp in spec.waypoints:
        if math.hypot(wp.x - nodes[-1][0], wp.y - nodes[-1][1]) <= 1e-9:
            nodes[-1][2] = wp.speed
            nodes[-1][3] += wp.hold
        else:
            nodes.append([wp.x, wp.y, wp.speed, wp.hold])

    origin = spec.start_pose
    c, s = math.cos(origin.heading), math.sin(origin.heading)

    def to_global(x: float, y: float) -> tuple[float, float]:
        return (origin.x + c * x - s * y, origin.y + s * x + c * y)

    samples: list[TrajectorySample] = []
    heading = origin.heading
    k = 0

    def emit(x: float, y: float, speed: float):
        nonlocal k
        samples.append(TrajectorySample(k * dt, Pose2(x, y, heading), speed))
        k += 1

    def dwell(x: float, y: float, hold: float):
        for _ in range(max(math.ceil(hold / dt - 1e-9), 1)):
            emit(x, y, 0.0)

    gx, gy = to_global(nodes[0][0], nodes[0][1])
    if len(nodes) > 1 and nodes[0][3] == 0.0:
        # Walking from the first sample: face and move at the first leg.
        nx, ny = to_global(nodes[1][0], nodes[1][1])
        heading = math.atan2(ny - gy, nx - gx)
        emit(gx, gy, min(max(nodes[0][2], 0.0), spec.speed_cap))
    else:
        emit(gx, gy, 0.0)
    if nodes[0][3] > 0:
        dwell(gx, gy, nodes[0][3])
    for prev, node in zip(nodes, nodes[1:]):
        px, py = to_global(prev[0], prev[1])
        nx, ny = to_global(node[0], node[1])
        dx, dy = nx - px, ny - py
        length = math.hypot(dx, dy)
        speed = min(max(prev[2], 0.0), spec.speed_cap)
        steps = max(round(length / max(speed, V_FLOOR_PED) / dt), 1)
        heading = math.atan2(dy, dx)
        for j in range(1, steps + 1):
            f = j / steps
            emit(px + f * dx, py + f * dy, speed)
        if node[3] > 0:
            dwell(nx, ny, node[3])
    return TimedTrajectory(tuple(samples), dt)
