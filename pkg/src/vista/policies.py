"""Pluggable ego policies.

A policy stands in for the driving stack under test: each step it sees a
ground-truth observation of the world (this toolkit's analog of modular
testing with perfect perception) and returns a speed/steering command.
Two built-ins ship as test doubles: a naive follower that drives straight
at its destination regardless of obstacles, and a braking variant that
stops for anything inside its forward corridor and for red or yellow
lights at an upcoming stop line.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .geometry import (
    BodyGeometry,
    Pose2,
    Vec2,
    forward_distance_to_segment,
    rect_corners,
    wrap_angle,
)


@dataclass(frozen=True)
class Command:
    """Target speed (m/s) plus steering expressed as path curvature (1/m)."""

    target_speed: float
    curvature: float = 0.0


@dataclass(frozen=True)
class ObservedEntity:
    entity_id: str
    entity_type: str  # actor | static
    pose: Pose2
    speed: float
    body: BodyGeometry


@dataclass(frozen=True)
class ObservedLight:
    light_id: str
    state: str
    stop_line: tuple[Vec2, Vec2]


@dataclass(frozen=True)
class Observation:
    sim_time: float
    ego_pose: Pose2
    ego_speed: float
    ego_body: BodyGeometry
    entities: tuple[ObservedEntity, ...]
    lights: tuple[ObservedLight, ...]
    destination: Vec2
    road_speed_limit: float


class EgoPolicy(ABC):
    """Deterministic callback from observation to command."""

    name = "ego_policy"

    @abstractmethod
    def decide(self, obs: Observation) -> Command:
        ...


class WaypointFollower(EgoPolicy):
    """Drives a straight line toward the destination, ignoring obstacles.

    Useful as the negative-test fixture: scenarios designed to require a
    reaction will produce collisions under this policy.
    """

    name = "waypoint_follower"

    def __init__(self, cruise_speed: float = 10.0, max_curvature: float = 0.5):
        self.cruise_speed = cruise_speed
        self.max_curvature = max_curvature

    def decide(self, obs: Observation) -> Command:
        dx = obs.destination[0] - obs.ego_pose.x
        dy = obs.destination[1] - obs.ego_pose.y
        err = wrap_angle(math.atan2(dy, dx) - obs.ego_pose.heading)
        # Close the heading error over ~0.5 s at the current speed.
        kappa = err / (max(obs.ego_speed, 1.0) * 0.5)
        kappa = max(-self.max_curvature, min(self.max_curvature, kappa))
        return Command(min(self.cruise_speed, obs.road_speed_limit), kappa)


class BrakingFollower(WaypointFollower):
    """Waypoint follower that brakes for corridor intrusions and stop lines.

    The corridor extends ahead of the front bumper by the stopping
    distance at the braking rate plus a reaction and standoff margin; its
    half-width is the ego half-width plus a side margin. Red and yellow
    lights whose stop line lies ahead within the corridor also command a
    stop; once the line is crossed the light is ignored.
    """

    name = "braking_follower"

    def __init__(
        self,
        cruise_speed: float = 10.0,
        max_curvature: float = 0.5,
        braking_rate: float = 3.0,
        reaction_time: float = 0.3,
        standoff: float = 1.0,
        side_margin: float = 0.5,
    ):
        super().__init__(cruise_speed, max_curvature)
        self.braking_rate = braking_rate
        self.reaction_time = reaction_time
        self.standoff = standoff
        self.side_margin = side_margin

    def _corridor_length(self, speed: float) -> float:
        return speed * speed / (2.0 * self.braking_rate) + speed * self.reaction_time + self.standoff

    def _entity_blocks(self, obs: Observation, length: float) -> bool:
        half_len = obs.ego_body.length / 2.0
        half_width = obs.ego_body.width / 2.0 + self.side_margin
        for e in obs.entities:
            corners = [obs.ego_pose.to_local(c) for c in rect_corners(e.pose, e.body)]
            if all(x <= half_len for x, _ in corners):
                continue  # fully behind or abreast of the front bumper
            if min(y for _, y in corners) > half_width or max(y for _, y in corners) < -half_width:
                continue  # outside the corridor laterally
            gap = min(x for x, _ in corners) - half_len
            if gap <= length:
                return True
        return False

    def _light_blocks(self, obs: Observation, length: float) -> bool:
        for light in obs.lights:
            if light.state not in ("red", "yellow"):
                continue
            d = forward_distance_to_segment(obs.ego_pose, *light.stop_line)
            if d is not None and d <= length + obs.ego_body.length / 2.0:
                return True
        return False

    def decide(self, obs: Observation) -> Command:
        cmd = super().decide(obs)
        length = self._corridor_length(obs.ego_speed)
        if self._entity_blocks(obs, length) or self._light_blocks(obs, length):
            return Command(0.0, cmd.curvature)
        return cmd


def builtin_policies() -> dict[str, type[EgoPolicy]]:
    """Registry of built-in policy classes keyed by CLI name."""
    return {
        WaypointFollower.name: WaypointFollower,
        BrakingFollower.name: BrakingFollower,
    }


def make_policy(name: str, **kwargs) -> EgoPolicy:
    registry = builtin_policies()
    if name not in registry:
        known = ", ".join(sorted(registry))
        raise ValueError(f"unknown policy {name!r}; known policies: {known}")
    return registry[name](**kwargs)
