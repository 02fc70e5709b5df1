"""Shared test helpers: brute-force geometry oracles and builders.

The oracles here are deliberately independent of the production code
paths they check: rectangle intersection is decided by rasterizing one
body on a 1 cm grid and testing containment in the other; distance by
sampling both boundaries at 1 cm; future collision time by projecting
corner trajectories at 1 ms resolution.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from vista.geometry import BodyGeometry, Pose2


def rect_overlap_oracle(
    pose_a: Pose2, body_a: BodyGeometry, pose_b: Pose2, body_b: BodyGeometry,
    res: float = 0.01,
) -> bool:
    """Rasterize rectangle A at `res` and test containment in B."""
    xs = np.arange(-body_a.length / 2, body_a.length / 2 + res / 2, res)
    ys = np.arange(-body_a.width / 2, body_a.width / 2 + res / 2, res)
    gx_local, gy_local = np.meshgrid(xs, ys)
    ca, sa = math.cos(pose_a.heading), math.sin(pose_a.heading)
    gx = pose_a.x + ca * gx_local - sa * gy_local
    gy = pose_a.y + sa * gx_local + ca * gy_local
    cb, sb = math.cos(pose_b.heading), math.sin(pose_b.heading)
    dx, dy = gx - pose_b.x, gy - pose_b.y
    lx = cb * dx + sb * dy
    ly = -sb * dx + cb * dy
    inside = (np.abs(lx) <= body_b.length / 2) & (np.abs(ly) <= body_b.width / 2)
    return bool(inside.any())


def rect_boundary_points(pose: Pose2, body: BodyGeometry, res: float = 0.01) -> np.ndarray:
    """Points along the rectangle's boundary at roughly `res` spacing."""
    hl, hw = body.length / 2, body.width / 2
    corners = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
    pts = []
    for (x0, y0), (x1, y1) in zip(corners, corners[1:] + corners[:1]):
        steps = max(int(math.hypot(x1 - x0, y1 - y0) / res), 1)
        for i in range(steps):
            f = i / steps
            pts.append((x0 + f * (x1 - x0), y0 + f * (y1 - y0)))
    local = np.array(pts)
    c, s = math.cos(pose.heading), math.sin(pose.heading)
    gx = pose.x + c * local[:, 0] - s * local[:, 1]
    gy = pose.y + s * local[:, 0] + c * local[:, 1]
    return np.stack([gx, gy], axis=1)


def rect_distance_oracle(
    pose_a: Pose2, body_a: BodyGeometry, pose_b: Pose2, body_b: BodyGeometry,
    res: float = 0.01,
) -> float:
    """Min distance between boundary samples (0 if the bodies overlap)."""
    if rect_overlap_oracle(pose_a, body_a, pose_b, body_b, res):
        return 0.0
    from scipy.spatial import cKDTree

    tree = cKDTree(rect_boundary_points(pose_b, body_b, res))
    dists, _ = tree.query(rect_boundary_points(pose_a, body_a, res))
    return float(dists.min())


def ttc_fine_oracle(
    ego_pose: Pose2, ego_speed: float, ego_body: BodyGeometry,
    actor_pose: Pose2, actor_speed: float, actor_body: BodyGeometry,
    horizon: float = 20.0, res: float = 0.001,
) -> float:
    """First future contact time at 1 ms resolution, via corner projections.

    Both bodies translate at constant velocity with fixed headings, so
    each corner moves linearly; the bodies touch at time tau when their
    corner projections overlap on all four edge axes.
    """
    from vista.geometry import rect_corners

    def setup(pose, body, speed):
        corners = np.array(rect_corners(pose, body))  # (4, 2)
        vel = np.array([speed * math.cos(pose.heading), speed * math.sin(pose.heading)])
        return corners, vel

    ca, va = setup(ego_pose, ego_body, ego_speed)
    cb, vb = setup(actor_pose, actor_body, actor_speed)
    axes = []
    for corners in (ca, cb):
        for i in (0, 1):
            e = corners[i + 1] - corners[i]
            n = np.array([e[1], -e[0]])
            norm = np.linalg.norm(n)
            if norm > 0:
                axes.append(n / norm)
    axes = np.array(axes)  # (4, 2)

    taus = np.arange(int(round(horizon / res)) + 1) * res
    pa = ca[None, :, :] + taus[:, None, None] * va[None, None, :]
    pb = cb[None, :, :] + taus[:, None, None] * vb[None, None, :]
    proj_a = np.einsum("tcx,kx->tkc", pa, axes)
    proj_b = np.einsum("tcx,kx->tkc", pb, axes)
    sep = (proj_a.min(axis=2) > proj_b.max(axis=2) + 1e-9) | (
        proj_b.min(axis=2) > proj_a.max(axis=2) + 1e-9
    )
    overlap = ~sep.any(axis=1)
    hits = np.nonzero(overlap)[0]
    return float(taus[hits[0]]) if hits.size else math.inf


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
