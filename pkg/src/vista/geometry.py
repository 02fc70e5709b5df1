"""Planar geometry kernel: poses, oriented rectangles, distances.

Conventions: SI units, right-handed frame, headings in radians
normalized to (-pi, pi]. Oriented rectangles are centered on a pose
with `length` along the heading axis and `width` across it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Touching rectangles count as overlapping; this pad absorbs float noise
# at exact-contact configurations.
CONTACT_EPS = 1e-9

Vec2 = tuple[float, float]


def wrap_angle(theta: float) -> float:
    """Normalize an angle into (-pi, pi]."""
    r = math.remainder(theta, math.tau)
    if r <= -math.pi:
        r += math.tau
    return r


@dataclass(frozen=True)
class Pose2:
    """Position plus heading in the global frame (meters, radians)."""

    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    @property
    def position(self) -> Vec2:
        return (self.x, self.y)

    def compose(self, local: "Pose2") -> "Pose2":
        """Interpret `local` in this pose's frame and return the global pose."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        return Pose2(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
            self.heading + local.heading,
        )

    def to_local(self, point: Vec2) -> Vec2:
        """Express a global point in this pose's frame."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        dx, dy = point[0] - self.x, point[1] - self.y
        return (c * dx + s * dy, -s * dx + c * dy)


@dataclass(frozen=True)
class BodyGeometry:
    """Footprint of a road user: length along heading, width across."""

    length: float
    width: float


def rect_corners(pose: Pose2, body: BodyGeometry) -> list[Vec2]:
    """Corners of the oriented rectangle, counterclockwise."""
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    hl, hw = body.length / 2.0, body.width / 2.0
    out = []
    for lx, ly in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)):
        out.append((pose.x + c * lx - s * ly, pose.y + s * lx + c * ly))
    return out


def _axes_of(corners: list[Vec2]) -> list[Vec2]:
    axes = []
    for i in (0, 1):
        ex = corners[i + 1][0] - corners[i][0]
        ey = corners[i + 1][1] - corners[i][1]
        n = math.hypot(ex, ey)
        if n > 0.0:
            axes.append((ey / n, -ex / n))
    return axes


def _project(corners: list[Vec2], axis: Vec2) -> tuple[float, float]:
    dots = [px * axis[0] + py * axis[1] for px, py in corners]
    return min(dots), max(dots)


def rects_overlap(a: list[Vec2], b: list[Vec2]) -> bool:
    """Separating-axis intersection test for two oriented rectangles.

    Touching configurations (gap within CONTACT_EPS) count as overlap.
    """
    for axis in _axes_of(a) + _axes_of(b):
        amin, amax = _project(a, axis)
        bmin, bmax = _project(b, axis)
        if amin > bmax + CONTACT_EPS or bmin > amax + CONTACT_EPS:
            return False
    return True


def penetration_depth(a: list[Vec2], b: list[Vec2]) -> float:
    """Minimal translation distance separating two overlapping rectangles.

    Returns 0.0 if the rectangles do not overlap.
    """
    depth = math.inf
    for axis in _axes_of(a) + _axes_of(b):
        amin, amax = _project(a, axis)
        bmin, bmax = _project(b, axis)
        overlap = min(amax, bmax) - max(amin, bmin)
        if overlap < -CONTACT_EPS:
            return 0.0
        depth = min(depth, max(overlap, 0.0))
    return depth


def point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    ax, ay = a
    bx, by = b
    vx, vy = bx - ax, by - ay
    wx, wy = p[0] - ax, p[1] - ay
    vv = vx * vx + vy * vy
    t = 0.0 if vv == 0.0 else max(0.0, min(1.0, (wx * vx + wy * vy) / vv))
    return math.hypot(p[0] - (ax + t * vx), p[1] - (ay + t * vy))


def _orient(a: Vec2, b: Vec2, c: Vec2) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool:
    """True if segment p1-p2 intersects segment q1-q2 (endpoints included)."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0) or d1 == 0 or d2 == 0) and (
        (d3 > 0) != (d4 > 0) or d3 == 0 or d4 == 0
    ):
        # Handle collinear cases by bounding-box overlap.
        if d1 == 0 and d2 == 0 and d3 == 0 and d4 == 0:
            return (
                min(p1[0], p2[0]) <= max(q1[0], q2[0])
                and min(q1[0], q2[0]) <= max(p1[0], p2[0])
                and min(p1[1], p2[1]) <= max(q1[1], q2[1])
                and min(q1[1], q2[1]) <= max(p1[1], p2[1])
            )
        return True
    return False


def segment_segment_distance(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> float:
    if segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(
        point_segment_distance(p1, q1, q2),
        point_segment_distance(p2, q1, q2),
        point_segment_distance(q1, p1, p2),
        point_segment_distance(q2, p1, p2),
    )


def rect_distance(a: list[Vec2], b: list[Vec2]) -> float:
    """Minimal distance between two oriented rectangles (0 when overlapping)."""
    if rects_overlap(a, b):
        return 0.0
    best = math.inf
    for i in range(4):
        a1, a2 = a[i], a[(i + 1) % 4]
        for j in range(4):
            best = min(best, segment_segment_distance(a1, a2, b[j], b[(j + 1) % 4]))
    return best


def forward_distance_to_segment(pose: Pose2, a: Vec2, b: Vec2) -> float | None:
    """Distance along the pose's heading ray to segment a-b, or None if missed."""
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    ex, ey = b[0] - a[0], b[1] - a[1]
    denom = c * ey - s * ex
    if abs(denom) < 1e-12:
        return None
    dx, dy = a[0] - pose.x, a[1] - pose.y
    d = (dx * ey - dy * ex) / denom
    u = (dx * s - dy * c) / denom
    if d < 0.0 or u < 0.0 or u > 1.0:
        return None
    return d
