"""Offline evaluation of run logs.

Objective metrics: collision overlap (separating-axis test on body
rectangles), minimal time-to-collision under constant-velocity
propagation, lateral/longitudinal safety-envelope clearances, temporal
gap (body distance over combined speeds), and road-speed-limit checks.
Heuristic behavior detectors: unnecessary swerving, harsh braking and
tailgating; their "without a valid reason" clause is approximated with
context guards (nothing ahead, no red/yellow light), so every behavior
finding carries needs_review for a human override.

Findings are classified Immediate Failure (IF) or Non-Conformity (NC).
Verdict table: any IF or a timeout is a FAIL; otherwise at least one NC
means PASS_NC; otherwise PASS. Manual annotations can add or dismiss
findings or force the outcome outright, and a forced outcome is final.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError
from .geometry import (
    CONTACT_EPS,
    BodyGeometry,
    Pose2,
    forward_distance_to_segment,
    penetration_depth,
    rect_corners,
    rect_distance,
    rects_overlap,
)
from .scenario import Scenario
from .simlog import StepRecord, group_steps
from .simlog import parse_log as parse_log  # re-exported: evaluator owns log parsing
from .simulator import RunResult

TTC_HORIZON = 20.0  # s
TTC_STEP = 0.05  # s, sweep resolution
SPEED_DIVISOR_FLOOR = 0.1  # m/s, below this the temporal gap is infinite

IF = "IF"
NC = "NC"

OUTCOME_PASS = "PASS"
OUTCOME_PASS_NC = "PASS_NC"
OUTCOME_FAIL = "FAIL"


@dataclass(frozen=True)
class Thresholds:
    """Metric limits. None of these come from a normative source; they are
    defensible urban-driving defaults and are fully config-overridable."""

    ttc_min: float = 1.5  # s
    temporal_gap_min: float = 1.0  # s
    lat_clear_min: float = 0.5  # m
    lon_clear_min: float = 2.0  # m
    speed_tolerance: float = 0.5  # m/s
    swerve_rate: float = 0.3  # rad/s
    swerve_window: float = 2.0  # s
    harsh_brake: float = 4.0  # m/s^2
    tailgate_time_headway: float = 1.0  # s
    tailgate_sustain: float = 2.0  # s

    @staticmethod
    def from_doc(doc: dict) -> "Thresholds":
        known = {f for f in Thresholds.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise FormatError(f"unknown threshold keys: {sorted(unknown)}")
        values = {k: float(v) for k, v in doc.items()}
        th = Thresholds(**values)
        for name in known:
            if not getattr(th, name) > 0:
                raise FormatError(f"threshold {name} must be > 0")
        return th

    @staticmethod
    def from_json(text: str) -> "Thresholds":
        return Thresholds.from_doc(json.loads(text))


@dataclass(frozen=True)
class Finding:
    metric_id: str
    severity: str  # IF | NC
    t_start: float
    t_end: float
    subject: str
    value: float
    threshold: float
    needs_review: bool = False

    def to_doc(self) -> dict:
        return {
            "metric_id": self.metric_id,
            "severity": self.severity,
            "t_start": self.t_start,
            "t_end": self.t_end,
            "subject": self.subject,
            "value": self.value,
            "threshold": self.threshold,
            "needs_review": self.needs_review,
        }


@dataclass(frozen=True)
class Verdict:
    outcome: str  # PASS | PASS_NC | FAIL
    findings: tuple[Finding, ...]
    completion: str
    completion_time: float | None = None
    notes: str = ""


@dataclass(frozen=True)
class Annotation:
    """Manual override: subjective judgement is final and binding."""

    test_case_id: str
    action: str  # add | dismiss | force_outcome
    payload: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Log access helpers


def _entity_rect(r: StepRecord) -> list[tuple[float, float]]:
    return rect_corners(Pose2(r.x, r.y, r.heading), BodyGeometry(r.length, r.width))


def _steps_and_entities(records: list[StepRecord]):
    """Grouped steps plus the per-entity aligned record table.

    Every non-ego entity must appear at every step (runs log all entities
    each step); a partial presence is a format defect.
    """
    steps = group_steps(records)
    ids: dict[str, list[StepRecord]] = {}
    for idx, (_, _, others) in enumerate(steps):
        for r in others:
            ids.setdefault(r.entity_id, []).append(r)
    for eid, rows in ids.items():
        if len(rows) != len(steps):
            raise FormatError(
                f"entity {eid!r} appears in {len(rows)} of {len(steps)} steps"
            )
    return steps, ids


def _merge_runs(flags: list[bool]) -> list[tuple[int, int]]:
    """Maximal [start, end] index runs where the flag holds."""
    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def _sorted_findings(findings: list[Finding]) -> list[Finding]:
    return sorted(findings, key=lambda f: (f.t_start, f.metric_id, f.subject))


# ---------------------------------------------------------------------------
# Objective metrics


def detect_collisions(records: list[StepRecord], th: Thresholds | None = None) -> list[Finding]:
    """Body-overlap findings, one per (entity, contiguous contact interval)."""
    steps, ids = _steps_and_entities(records)
    times = [t for t, _, _ in steps]
    findings: list[Finding] = []
    for eid, rows in sorted(ids.items()):
        flags: list[bool] = []
        depths: list[float] = []
        for (_, ego, _), row in zip(steps, rows):
            ego_rect = _entity_rect(ego)
            rect = _entity_rect(row)
            hit = rects_overlap(ego_rect, rect)
            flags.append(hit)
            depths.append(penetration_depth(ego_rect, rect) if hit else 0.0)
        for i0, i1 in _merge_runs(flags):
            findings.append(
                Finding(
                    "collision", IF, times[i0], times[i1], eid,
                    value=max(depths[i0 : i1 + 1]), threshold=0.0,
                )
            )
    return _sorted_findings(findings)


def _ttc_per_entity(
    records: list[StepRecord],
    horizon: float = TTC_HORIZON,
    tau_step: float = TTC_STEP,
) -> tuple[list[float], dict[str, np.ndarray]]:
    """Constant-velocity sweep TTC per step per entity.

    Both bodies are propagated along their current headings at their
    current speeds; TTC is the first sweep instant at which the
    rectangles overlap, infinity if none within the horizon.
    """
    steps, ids = _steps_and_entities(records)
    times = [t for t, _, _ in steps]
    n = len(steps)
    if n == 0:
        return [], {}

    def arrays(rows: list[StepRecord]):
        x = np.array([r.x for r in rows])
        y = np.array([r.y for r in rows])
        h = np.array([r.heading for r in rows])
        v = np.array([r.speed for r in rows])
        length = np.array([r.length for r in rows])
        width = np.array([r.width for r in rows])
        return x, y, h, v, length, width

    ego_rows = [ego for _, ego, _ in steps]
    ex, ey, eh, ev, el, ew = arrays(ego_rows)
    ue = np.stack([np.cos(eh), np.sin(eh)], axis=1)  # (n, 2)
    ne = np.stack([-np.sin(eh), np.cos(eh)], axis=1)
    tau = np.arange(int(round(horizon / tau_step)) + 1) * tau_step  # (T,)

    out: dict[str, np.ndarray] = {}
    for eid, rows in sorted(ids.items()):
        ax, ay, ah, av, al, aw = arrays(rows)
        ua = np.stack([np.cos(ah), np.sin(ah)], axis=1)
        na = np.stack([-np.sin(ah), np.cos(ah)], axis=1)
        axes = np.stack([ue, ne, ua, na], axis=1)  # (n, 4, 2)
        half = np.stack([el / 2, ew / 2, al / 2, aw / 2], axis=1)  # (n, 4)
        units = np.stack([ue, ne, ua, na], axis=1)  # (n, 4, 2)
        # Projection radius of both rectangles on each axis.
        radius = np.zeros((n, 4))
        for k in range(4):
            dots = np.abs(np.einsum("nkx,nx->nk", axes, units[:, k, :]))
            radius += half[:, k : k + 1] * dots

        dp = np.stack([ax - ex, ay - ey], axis=1)  # (n, 2)
        dv = np.stack(
            [av * ua[:, 0] - ev * ue[:, 0], av * ua[:, 1] - ev * ue[:, 1]], axis=1
        )
        proj_p = np.einsum("nkx,nx->nk", axes, dp)  # (n, 4)
        proj_v = np.einsum("nkx,nx->nk", axes, dv)
        # |proj_p + proj_v * tau| <= radius on every axis -> overlap at tau.
        sep = np.abs(proj_p[:, :, None] + proj_v[:, :, None] * tau[None, None, :])
        hit = np.all(sep <= radius[:, :, None] + CONTACT_EPS, axis=1)  # (n, T)
        any_hit = hit.any(axis=1)
        first = np.argmax(hit, axis=1)
        ttc = np.where(any_hit, tau[first], np.inf)
        out[eid] = ttc
    return times, out


def ttc_series(records: list[StepRecord]) -> list[float]:
    """Per-step minimal TTC over all other entities (inf if none threatens)."""
    times, per_entity = _ttc_per_entity(records)
    if not per_entity:
        return [math.inf] * len(times)
    stacked = np.stack(list(per_entity.values()), axis=0)
    return list(np.min(stacked, axis=0))


def ttc_findings(records: list[StepRecord], th: Thresholds) -> list[Finding]:
    times, per_entity = _ttc_per_entity(records)
    collisions = detect_collisions(records)
    findings: list[Finding] = []
    for eid, series in sorted(per_entity.items()):
        flags = [v < th.ttc_min for v in series]
        for i0, i1 in _merge_runs(flags):
            t0, t1 = times[i0], times[i1]
            overlapping_collision = any(
                c.subject == eid and c.t_start <= t1 and t0 <= c.t_end for c in collisions
            )
            findings.append(
                Finding(
                    "ttc",
                    IF if overlapping_collision else NC,
                    t0, t1, eid,
                    value=float(min(series[i0 : i1 + 1])),
                    threshold=th.ttc_min,
                )
            )
    return _sorted_findings(findings)


def _local_corners(ego: StepRecord, other: StepRecord) -> list[tuple[float, float]]:
    pose = Pose2(ego.x, ego.y, ego.heading)
    return [pose.to_local(c) for c in _entity_rect(other)]


def clearance_series(
    records: list[StepRecord], th: Thresholds
) -> tuple[list[float], dict[str, list[tuple[float, float]]]]:
    """Per-step (longitudinal, lateral) clearances per entity, in meters.

    Clearances are corner gaps in the ego body frame, reported only while
    the other body is inside the relevant band (laterally for the
    longitudinal gap, longitudinally for the lateral gap); infinity
    otherwise. Negative values mean the corner is inside the ego slab.
    """
    steps, ids = _steps_and_entities(records)
    times = [t for t, _, _ in steps]
    out: dict[str, list[tuple[float, float]]] = {}
    for eid, rows in sorted(ids.items()):
        series = []
        for (_, ego, _), row in zip(steps, rows):
            corners = _local_corners(ego, row)
            hl, hw = ego.length / 2.0, ego.width / 2.0
            xs = [x for x, _ in corners]
            ys = [y for _, y in corners]
            lon = math.inf
            if min(ys) < hw + th.lat_clear_min and max(ys) > -(hw + th.lat_clear_min):
                lon = min(abs(x) - hl for x in xs)
            lat = math.inf
            if min(xs) < hl + th.lon_clear_min and max(xs) > -(hl + th.lon_clear_min):
                lat = min(abs(y) - hw for y in ys)
            series.append((lon, lat))
        out[eid] = series
    return times, out


def clearance_findings(records: list[StepRecord], th: Thresholds) -> list[Finding]:
    times, series = clearance_series(records, th)
    findings: list[Finding] = []
    for eid, values in sorted(series.items()):
        for metric, limit, idx in (
            ("longitudinal_clearance", th.lon_clear_min, 0),
            ("lateral_clearance", th.lat_clear_min, 1),
        ):
            flags = [v[idx] < limit for v in values]
            for i0, i1 in _merge_runs(flags):
                worst = min(v[idx] for v in values[i0 : i1 + 1])
                findings.append(
                    Finding(metric, NC, times[i0], times[i1], eid, worst, limit)
                )
    return _sorted_findings(findings)


def temporal_gap_series(
    records: list[StepRecord],
) -> tuple[list[float], dict[str, list[float]]]:
    """Seconds to close the body gap at current combined speeds."""
    steps, ids = _steps_and_entities(records)
    times = [t for t, _, _ in steps]
    out: dict[str, list[float]] = {}
    for eid, rows in sorted(ids.items()):
        series = []
        for (_, ego, _), row in zip(steps, rows):
            gap = rect_distance(_entity_rect(ego), _entity_rect(row))
            divisor = abs(ego.speed) + abs(row.speed)
            series.append(gap / divisor if divisor >= SPEED_DIVISOR_FLOOR else math.inf)
        out[eid] = series
    return times, out


def temporal_gap_findings(records: list[StepRecord], th: Thresholds) -> list[Finding]:
    times, series = temporal_gap_series(records)
    findings: list[Finding] = []
    for eid, values in sorted(series.items()):
        flags = [v < th.temporal_gap_min for v in values]
        for i0, i1 in _merge_runs(flags):
            findings.append(
                Finding(
                    "temporal_gap", NC, times[i0], times[i1], eid,
                    value=min(values[i0 : i1 + 1]), threshold=th.temporal_gap_min,
                )
            )
    return _sorted_findings(findings)


def speed_violations(
    records: list[StepRecord], road_speed_limit: float, th: Thresholds
) -> list[Finding]:
    steps, _ = _steps_and_entities(records)
    times = [t for t, _, _ in steps]
    speeds = [ego.speed for _, ego, _ in steps]
    limit = road_speed_limit + th.speed_tolerance
    flags = [v > limit for v in speeds]
    findings = []
    for i0, i1 in _merge_runs(flags):
        findings.append(
            Finding(
                "speed_limit", NC, times[i0], times[i1], "ego",
                value=max(speeds[i0 : i1 + 1]), threshold=road_speed_limit,
            )
        )
    return findings


# ---------------------------------------------------------------------------
# Behavior heuristics


def _entity_ahead_within(ego: StepRecord, others: list[StepRecord], dist: float, th: Thresholds) -> bool:
    hl, hw = ego.length / 2.0, ego.width / 2.0
    for row in others:
        corners = _local_corners(ego, row)
        ys = [y for _, y in corners]
        if min(ys) >= hw + th.lat_clear_min or max(ys) <= -(hw + th.lat_clear_min):
            continue
        xs = [x for x, _ in corners]
        if max(xs) <= hl:
            continue  # fully behind the front bumper
        if min(x for x in xs) - hl <= dist:
            return True
    return False


def _light_context(ego: StepRecord, t: float, scenario: Scenario | None, dist: float) -> bool:
    if scenario is None:
        return False
    pose = Pose2(ego.x, ego.y, ego.heading)
    for tl in scenario.traffic_lights:
        if tl.state_at(t) not in ("red", "yellow"):
            continue
        d = forward_distance_to_segment(pose, *tl.stop_line)
        if d is not None and d <= dist:
            return True
    return False


def behavior_findings(
    records: list[StepRecord], th: Thresholds, scenario: Scenario | None = None
) -> list[Finding]:
    """Swerving, harsh-braking and tailgating heuristics, all NC and
    flagged for review. The scenario, when given, supplies traffic-light
    context so braking at a red or yellow light is excused."""
    steps, _ = _steps_and_entities(records)
    if len(steps) < 2:
        return []
    times = [t for t, _, _ in steps]
    dt = times[1] - times[0]
    egos = [ego for _, ego, _ in steps]
    others_per_step = [others for _, _, others in steps]
    findings: list[Finding] = []

    # Swerving: heading rate sustained above the limit on an open road.
    rates = [0.0]
    for a, b in zip(egos, egos[1:]):
        rates.append(_angle_diff(b.heading, a.heading) / dt)
    swerve_flags = []
    for i, ego in enumerate(egos):
        open_road = not _entity_ahead_within(ego, others_per_step[i], 2.0 * th.lon_clear_min, th)
        swerve_flags.append(abs(rates[i]) > th.swerve_rate and ego.speed > 1.0 and open_road)
    for i0, i1 in _merge_runs(swerve_flags):
        if times[i1] - times[i0] >= th.swerve_window:
            findings.append(
                Finding(
                    "swerving", NC, times[i0], times[i1], "ego",
                    value=max(abs(r) for r in rates[i0 : i1 + 1]),
                    threshold=th.swerve_rate, needs_review=True,
                )
            )

    # Harsh braking without an obstacle or a red/yellow light ahead.
    brake_flags = []
    decels = []
    for i, ego in enumerate(egos):
        decel = (egos[i - 1].speed - ego.speed) / dt if i > 0 else 0.0
        decels.append(decel)
        if decel <= th.harsh_brake:
            brake_flags.append(False)
            continue
        v = egos[i - 1].speed
        corridor = v * v / (2.0 * th.harsh_brake) + th.lon_clear_min
        excused = _entity_ahead_within(egos[i - 1], others_per_step[i - 1], corridor, th) or _light_context(
            egos[i - 1], times[i - 1], scenario, corridor + 15.0
        )
        brake_flags.append(not excused)
    for i0, i1 in _merge_runs(brake_flags):
        findings.append(
            Finding(
                "harsh_braking", NC, times[i0], times[i1], "ego",
                value=max(decels[i0 : i1 + 1]), threshold=th.harsh_brake,
                needs_review=True,
            )
        )

    # Tailgating: short time headway to the lead road user, sustained.
    headways = []
    for i, ego in enumerate(egos):
        hl, hw = ego.length / 2.0, ego.width / 2.0
        best = math.inf
        for row in others_per_step[i]:
            if row.entity_type != "actor":
                continue
            corners = _local_corners(ego, row)
            ys = [y for _, y in corners]
            if min(ys) >= hw + th.lat_clear_min or max(ys) <= -(hw + th.lat_clear_min):
                continue
            xs = [x for x, _ in corners]
            if min(xs) <= hl:
                continue  # not fully ahead
            best = min(best, min(xs) - hl)
        headways.append(best / ego.speed if ego.speed > 0.5 and best < math.inf else math.inf)
    tail_flags = [h < th.tailgate_time_headway for h in headways]
    for i0, i1 in _merge_runs(tail_flags):
        if times[i1] - times[i0] > th.tailgate_sustain:
            findings.append(
                Finding(
                    "tailgating", NC, times[i0], times[i1], "ego",
                    value=min(headways[i0 : i1 + 1]), threshold=th.tailgate_time_headway,
                    needs_review=True,
                )
            )

    return _sorted_findings(findings)


def _angle_diff(b: float, a: float) -> float:
    d = math.fmod(b - a, math.tau)
    if d > math.pi:
        d -= math.tau
    elif d <= -math.pi:
        d += math.tau
    return d


# ---------------------------------------------------------------------------
# Verdict assembly


def verdict_outcome(completion: str, findings: list[Finding]) -> str:
    """The verdict truth table: IF or timeout fails; NC passes with notes."""
    has_if = any(f.severity == IF for f in findings)
    has_nc = any(f.severity == NC for f in findings)
    if has_if or completion != "reached_destination":
        return OUTCOME_FAIL
    if has_nc:
        return OUTCOME_PASS_NC
    return OUTCOME_PASS


def apply_annotations(
    findings: list[Finding], annotations: list[Annotation]
) -> tuple[list[Finding], str | None, list[str]]:
    """Apply manual overrides; returns (findings, forced outcome, notes)."""
    out = list(findings)
    forced: str | None = None
    notes: list[str] = []
    for ann in annotations:
        payload = ann.payload
        if ann.action == "add":
            out.append(
                Finding(
                    metric_id=str(payload["metric_id"]),
                    severity=str(payload.get("severity", NC)),
                    t_start=float(payload.get("t_start", 0.0)),
                    t_end=float(payload.get("t_end", payload.get("t_start", 0.0))),
                    subject=str(payload.get("subject", "ego")),
                    value=float(payload.get("value", 0.0)),
                    threshold=float(payload.get("threshold", 0.0)),
                )
            )
            notes.append(f"added {payload['metric_id']} finding by annotation")
        elif ann.action == "dismiss":
            metric = payload.get("metric_id")
            subject = payload.get("subject")
            before = len(out)
            out = [
                f
                for f in out
                if not (
                    (metric is None or f.metric_id == metric)
                    and (subject is None or f.subject == subject)
                )
            ]
            notes.append(f"dismissed {before - len(out)} finding(s) by annotation")
        elif ann.action == "force_outcome":
            forced = str(payload["outcome"])
            notes.append(f"outcome forced to {forced} by annotation")
        else:
            raise FormatError(f"unknown annotation action {ann.action!r}")
        if payload.get("note"):
            notes.append(str(payload["note"]))
    return _sorted_findings(out), forced, notes


def evaluate(
    run: RunResult,
    scenario: Scenario,
    th: Thresholds | None = None,
    annotations: list[Annotation] | None = None,
) -> Verdict:
    """Run every metric over a completed run and fold findings into a verdict."""
    th = th or Thresholds()
    records = list(run.log.records)
    findings: list[Finding] = []
    findings += detect_collisions(records, th)
    findings += ttc_findings(records, th)
    findings += clearance_findings(records, th)
    findings += temporal_gap_findings(records, th)
    findings += speed_violations(records, scenario.road_speed_limit, th)
    findings += behavior_findings(records, th, scenario)
    findings = _sorted_findings(findings)

    notes: list[str] = []
    forced = None
    if annotations:
        findings, forced, notes = apply_annotations(findings, annotations)
    if run.error:
        notes.append(f"run error: {run.error}")

    outcome = forced if forced is not None else verdict_outcome(run.completion, findings)
    return Verdict(
        outcome=outcome,
        findings=tuple(findings),
        completion=run.completion,
        completion_time=run.completion_time,
        notes="; ".join(notes),
    )
