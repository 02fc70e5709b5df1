"""Scenario domain types and invariant validation.

A scenario bundles the map label, the ego mission, a time budget, scripted
actors, and environment configuration (weather windows, traffic lights,
static props). Weather carries no physics; it is metadata that tags runs
for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import BodyGeometry, Pose2, Vec2
from .maneuvers import ManeuverL2

CATEGORIES = (
    "basic_functional",
    "negative",
    "environmental",
    "odd_coverage",
    "regression",
)

ACTOR_KINDS = ("pedestrian", "car", "truck", "bus", "motorbike", "cyclist", "emergency")
STATIC_KINDS = ("cone", "barrier", "parked_prop")
TRIGGER_KINDS = ("immediate", "at_time", "ego_within_radius", "ego_crosses_line")
LIGHT_STATES = ("red", "yellow", "green")

DEFAULT_ROAD_SPEED_LIMIT = 13.9  # m/s, ~50 km/h urban
DEFAULT_ACTOR_SPEED_CAP = 30.0  # m/s, trajectory authoring cap per actor


@dataclass(frozen=True)
class Trigger:
    """Condition that starts an actor's trajectory playback."""

    kind: str = "immediate"
    time: float = 0.0  # at_time
    radius: float = 0.0  # ego_within_radius
    line: tuple[Vec2, Vec2] | None = None  # ego_crosses_line


@dataclass(frozen=True)
class PedestrianWaypoint:
    """Waypoint in the actor's start-pose frame; speed applies to the leg it starts."""

    x: float
    y: float
    speed: float = 1.4
    hold: float = 0.0


@dataclass(frozen=True)
class ActorSpec:
    actor_id: str
    kind: str
    body: BodyGeometry
    start_pose: Pose2
    trigger: Trigger = field(default_factory=Trigger)
    # Exactly one of the two script forms is set: explicit waypoints
    # (pedestrian-style) or a semantic maneuver sequence (vehicles).
    waypoints: tuple[PedestrianWaypoint, ...] = ()
    maneuvers: tuple[ManeuverL2, ...] = ()
    speed_cap: float = DEFAULT_ACTOR_SPEED_CAP


@dataclass(frozen=True)
class WeatherWindow:
    start: float
    end: float
    params: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TrafficLightConfig:
    light_id: str
    stop_line: tuple[Vec2, Vec2]
    phase_schedule: tuple[tuple[str, float], ...]  # cycles after the last entry

    def state_at(self, t: float) -> str:
        total = sum(d for _, d in self.phase_schedule)
        t = math.fmod(t, total)
        if t < 0:
            t += total
        for state, duration in self.phase_schedule:
            if t < duration:
                return state
            t -= duration
        return self.phase_schedule[-1][0]


@dataclass(frozen=True)
class StaticObject:
    object_id: str
    kind: str
    pose: Pose2
    body: BodyGeometry


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    map_id: str
    ego_start: Pose2
    ego_destination: Vec2
    time_limit: float
    actors: tuple[ActorSpec, ...] = ()
    weather_windows: tuple[WeatherWindow, ...] = ()
    traffic_lights: tuple[TrafficLightConfig, ...] = ()
    static_objects: tuple[StaticObject, ...] = ()
    road_speed_limit: float = DEFAULT_ROAD_SPEED_LIMIT
    category: str = "basic_functional"


@dataclass(frozen=True)
class Violation:
    """One broken invariant: a stable rule id plus a human-readable message."""

    rule: str
    message: str


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def validate_scenario(s: Scenario) -> list[Violation]:
    """Check every domain invariant; an empty list means the scenario is valid."""
    out: list[Violation] = []

    def bad(rule: str, message: str):
        out.append(Violation(rule, message))

    if not s.time_limit > 0:
        bad("time_limit_positive", f"time_limit must be > 0, got {s.time_limit}")
    if not s.road_speed_limit > 0:
        bad("road_speed_limit_positive", f"road_speed_limit must be > 0, got {s.road_speed_limit}")
    if s.category not in CATEGORIES:
        bad("category_known", f"unknown category {s.category!r}")
    if not _finite(s.ego_start.x, s.ego_start.y, s.ego_start.heading):
        bad("ego_start_finite", "ego start pose has non-finite fields")
    if not _finite(*s.ego_destination):
        bad("ego_destination_finite", "ego destination has non-finite coordinates")
    elif s.ego_destination == (s.ego_start.x, s.ego_start.y):
        bad("ego_destination_distinct", "destination coincides with the ego start position")

    seen: set[str] = set()
    for a in s.actors:
        ctx = f"actor {a.actor_id!r}"
        if a.actor_id in seen:
            bad("actor_ids_unique", f"duplicate actor id {a.actor_id!r}")
        seen.add(a.actor_id)
        if a.kind not in ACTOR_KINDS:
            bad("actor_kind_known", f"{ctx}: unknown kind {a.kind!r}")
        if not (a.body.length > 0 and a.body.width > 0):
            bad("actor_body_positive", f"{ctx}: body dimensions must be > 0")
        if not _finite(a.start_pose.x, a.start_pose.y, a.start_pose.heading):
            bad("actor_pose_finite", f"{ctx}: start pose has non-finite fields")
        if not (a.waypoints or a.maneuvers):
            bad("actor_script_nonempty", f"{ctx}: script is empty")
        if a.waypoints and a.maneuvers:
            bad("actor_script_single_form", f"{ctx}: both waypoints and maneuvers given")
        if not a.speed_cap > 0:
            bad("actor_speed_cap_positive", f"{ctx}: speed_cap must be > 0")
        for w in a.waypoints:
            if w.speed < 0 or w.hold < 0:
                bad("waypoint_params_nonnegative", f"{ctx}: waypoint speed/hold must be >= 0")
                break
        t = a.trigger
        if t.kind not in TRIGGER_KINDS:
            bad("trigger_kind_known", f"{ctx}: unknown trigger kind {t.kind!r}")
        elif t.kind == "at_time" and t.time < 0:
            bad("trigger_time_nonnegative", f"{ctx}: trigger time must be >= 0")
        elif t.kind == "ego_within_radius" and not t.radius > 0:
            bad("trigger_radius_positive", f"{ctx}: trigger radius must be > 0")
        elif t.kind == "ego_crosses_line" and t.line is None:
            bad("trigger_line_present", f"{ctx}: crossing trigger needs a line segment")

    prev_end = -math.inf
    for i, w in enumerate(s.weather_windows):
        if not w.start < w.end:
            bad("weather_window_order", f"weather window {i}: start must be < end")
        if w.start < prev_end:
            bad("weather_windows_disjoint", f"weather window {i} overlaps or precedes the previous one")
        prev_end = max(prev_end, w.end)

    seen_lights: set[str] = set()
    for tl in s.traffic_lights:
        if tl.light_id in seen_lights:
            bad("light_ids_unique", f"duplicate light id {tl.light_id!r}")
        seen_lights.add(tl.light_id)
        if not tl.phase_schedule:
            bad("light_schedule_nonempty", f"light {tl.light_id!r}: empty phase schedule")
        for state, duration in tl.phase_schedule:
            if state not in LIGHT_STATES:
                bad("light_state_known", f"light {tl.light_id!r}: unknown state {state!r}")
            if not duration > 0:
                bad("light_durations_positive", f"light {tl.light_id!r}: durations must be > 0")

    seen_statics: set[str] = set()
    for obj in s.static_objects:
        if obj.object_id in seen_statics:
            bad("static_ids_unique", f"duplicate static object id {obj.object_id!r}")
        seen_statics.add(obj.object_id)
        if obj.kind not in STATIC_KINDS:
            bad("static_kind_known", f"object {obj.object_id!r}: unknown kind {obj.kind!r}")
        if not (obj.body.length > 0 and obj.body.width > 0):
            bad("static_body_positive", f"object {obj.object_id!r}: body dimensions must be > 0")

    return out
