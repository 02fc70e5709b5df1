"""Quintic-polynomial trajectory smoothing.

A sparse sequence of key-waypoints (pose + commanded speed + optional
dwell) is densified into a uniformly sampled timed trajectory. Each
consecutive waypoint pair gets a degree-5 polynomial per axis matching
position, velocity and acceleration at both ends. Acceleration and jerk
are deliberately unbounded: scripted road users may drive abruptly by
design. A hard speed cap is applied instead.

Segment timing: duration = chord length / mean of the two commanded
speeds (floored at V_FLOOR to stay well-posed near stops), snapped to a
whole number of sample steps so every key-waypoint lands exactly on a
sample. Boundary accelerations are pinned to zero at every waypoint,
which keeps the per-segment solve independent and guarantees C1 joints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams, SingularSystem
from .geometry import Pose2

V_FLOOR = 0.5  # m/s, duration floor speed for near-stop segments
CHORD_EPS = 1e-9  # m, below this a segment is a pure dwell

# Boundary-condition matrix for the tail coefficients of a quintic on
# normalized time tau in [0, 1].
_M = np.array([[1.0, 1.0, 1.0], [3.0, 4.0, 5.0], [6.0, 12.0, 20.0]])
_M_INV = np.linalg.inv(_M)


@dataclass(frozen=True)
class BoundaryState:
    """Endpoint condition of a segment: position, velocity, acceleration (2D)."""

    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    acceleration: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class QuinticSegment:
    """Two degree-5 polynomials x(t), y(t) over t in [0, duration] seconds."""

    coeffs_x: tuple[float, float, float, float, float, float]
    coeffs_y: tuple[float, float, float, float, float, float]
    duration: float

    def position(self, t: float) -> tuple[float, float]:
        return _polyval(self.coeffs_x, t), _polyval(self.coeffs_y, t)

    def velocity(self, t: float) -> tuple[float, float]:
        return _polyval(_derive(self.coeffs_x), t), _polyval(_derive(self.coeffs_y), t)

    def acceleration(self, t: float) -> tuple[float, float]:
        ddx = _derive(_derive(self.coeffs_x))
        ddy = _derive(_derive(self.coeffs_y))
        return _polyval(ddx, t), _polyval(ddy, t)


def _polyval(coeffs, t: float) -> float:
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def _derive(coeffs):
    return tuple(k * c for k, c in enumerate(coeffs) if k > 0)


def solve_quintic_segment(
    start: BoundaryState, end: BoundaryState, duration: float
) -> QuinticSegment:
    """Unique quintic matching six boundary conditions per axis.

    The solve runs on normalized time for conditioning; returned
    coefficients are in plain seconds.
    """
    values = (
        *start.position, *start.velocity, *start.acceleration,
        *end.position, *end.velocity, *end.acceleration, duration,
    )
    if not all(math.isfinite(v) for v in values):
        raise SingularSystem("non-finite boundary condition")
    if not duration > 0:
        raise SingularSystem(f"duration must be > 0, got {duration}")

    T = duration
    coeffs = []
    for axis in (0, 1):
        p0, v0, a0 = start.position[axis], start.velocity[axis], start.acceleration[axis]
        p1, v1, a1 = end.position[axis], end.velocity[axis], end.acceleration[axis]
        b0, b1, b2 = p0, v0 * T, a0 * T * T / 2.0
        rhs = np.array(
            [p1 - (b0 + b1 + b2), v1 * T - (b1 + 2.0 * b2), a1 * T * T - 2.0 * b2]
        )
        b3, b4, b5 = (float(v) for v in _M_INV @ rhs)
        coeffs.append(
            (float(b0), b1 / T, b2 / T**2, b3 / T**3, b4 / T**4, b5 / T**5)
        )
    return QuinticSegment(coeffs[0], coeffs[1], duration)


@dataclass(frozen=True)
class KeyWaypoint:
    """Sparse trajectory node: pose, commanded speed, optional dwell time."""

    pose: Pose2
    speed: float
    hold: float = 0.0


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    pose: Pose2
    speed: float


@dataclass(frozen=True)
class TimedTrajectory:
    """Dense (time, pose, speed) samples at a uniform step, replayed verbatim."""

    samples: tuple[TrajectorySample, ...]
    dt: float

    @property
    def duration(self) -> float:
        return self.samples[-1].t if self.samples else 0.0

    def sample_at_step(self, step: int) -> TrajectorySample:
        """Sample at the given step index, holding the final pose past the end."""
        if step >= len(self.samples):
            return self.samples[-1]
        return self.samples[max(step, 0)]


@dataclass(frozen=True)
class MotionPhase:
    segment: QuinticSegment
    steps: int


@dataclass(frozen=True)
class DwellPhase:
    pose: Pose2
    steps: int


def plan_phases(
    keywaypoints: list[KeyWaypoint], speed_limit: float, dt: float
) -> list[MotionPhase | DwellPhase]:
    """Timing plan for a waypoint sequence: quintic legs plus stationary dwells."""
    if len(keywaypoints) < 2:
        raise InvalidParams("need at least 2 key-waypoints to smooth")
    if not speed_limit > 0:
        raise InvalidParams(f"speed_limit must be > 0, got {speed_limit}")
    if not dt > 0:
        raise InvalidParams(f"dt must be > 0, got {dt}")

    phases: list[MotionPhase | DwellPhase] = []
    clamped = [min(max(kw.speed, 0.0), speed_limit) for kw in keywaypoints]
    for i, kw in enumerate(keywaypoints):
        if i > 0:
            prev = keywaypoints[i - 1]
            chord = math.hypot(kw.pose.x - prev.pose.x, kw.pose.y - prev.pose.y)
            if chord > CHORD_EPS:
                v_mean = max((clamped[i - 1] + clamped[i]) / 2.0, V_FLOOR)
                steps = max(round(chord / v_mean / dt), 1)
                segment = solve_quintic_segment(
                    _boundary(prev.pose, clamped[i - 1]),
                    _boundary(kw.pose, clamped[i]),
                    steps * dt,
                )
                phases.append(MotionPhase(segment, steps))
        if kw.hold > 0:
            phases.append(DwellPhase(kw.pose, max(math.ceil(kw.hold / dt - 1e-9), 1)))
    return phases


def _boundary(pose: Pose2, speed: float) -> BoundaryState:
    return BoundaryState(
        position=(pose.x, pose.y),
        velocity=(speed * math.cos(pose.heading), speed * math.sin(pose.heading)),
    )


def smooth(
    keywaypoints: list[KeyWaypoint], speed_limit: float, dt: float
) -> TimedTrajectory:
    """Densify global key-waypoints into a uniformly sampled trajectory.

    Sample speeds are capped at speed_limit; heading follows the velocity
    direction and holds its last value through stops.
    """
    phases = plan_phases(keywaypoints, speed_limit, dt)
    samples: list[TrajectorySample] = []
    heading = keywaypoints[0].pose.heading
    k = 0  # global sample index; t = k * dt exactly

    def emit(x: float, y: float, vx: float, vy: float):
        nonlocal heading, k
        raw = math.hypot(vx, vy)
        if raw > 1e-6:
            heading = math.atan2(vy, vx)
        samples.append(
            TrajectorySample(k * dt, Pose2(x, y, heading), min(raw, speed_limit))
        )
        k += 1

    first = keywaypoints[0].pose
    if phases and isinstance(phases[0], MotionPhase):
        vx0, vy0 = phases[0].segment.velocity(0.0)
    else:
        vx0, vy0 = 0.0, 0.0
    emit(first.x, first.y, vx0, vy0)

    for phase in phases:
        if isinstance(phase, DwellPhase):
            pose = Pose2(phase.pose.x, phase.pose.y, heading)
            for _ in range(phase.steps):
                samples.append(TrajectorySample(k * dt, pose, 0.0))
                k += 1
        else:
            seg = phase.segment
            for j in range(1, phase.steps + 1):
                t_local = j * dt if j < phase.steps else seg.duration
                x, y = seg.position(t_local)
                vx, vy = seg.velocity(t_local)
                emit(x, y, vx, vy)
    return TimedTrajectory(tuple(samples), dt)
