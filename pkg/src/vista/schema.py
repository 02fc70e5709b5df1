"""Scenario JSON external format, schema version 1.

The format is documented field by field in docs/scenario_schema.md.
Two layouts are accepted: a single self-contained file with inline
actors, and a scenario file whose actor entries are ``{"ref": ...}``
references to actor files resolved relative to the scenario file's
directory. Serialization always emits the canonical single-file form
(sorted keys, every field explicit) so that parse(serialize(s)) == s.

All lengths are meters, times seconds, headings radians; a heading may
be authored in degrees by using the ``heading_deg`` key instead.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .errors import SchemaError, ValidationError
from .geometry import BodyGeometry, Pose2
from .maneuvers import ManeuverL2
from .scenario import (
    ActorSpec,
    PedestrianWaypoint,
    Scenario,
    StaticObject,
    TrafficLightConfig,
    Trigger,
    WeatherWindow,
    validate_scenario,
)

SCHEMA_VERSION = 1


def _expect_dict(node: Any, path: str) -> dict:
    if not isinstance(node, dict):
        raise SchemaError(f"expected an object, got {type(node).__name__}", path)
    return node


def _expect_list(node: Any, path: str) -> list:
    if not isinstance(node, list):
        raise SchemaError(f"expected an array, got {type(node).__name__}", path)
    return node


def _num(doc: dict, key: str, path: str, default: float | None = None) -> float:
    if key not in doc:
        if default is None:
            raise SchemaError(f"missing required field {key!r}", path)
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"field {key!r} must be a number", path)
    return float(v)


def _text(doc: dict, key: str, path: str, default: str | None = None) -> str:
    if key not in doc:
        if default is None:
            raise SchemaError(f"missing required field {key!r}", path)
        return default
    v = doc[key]
    if not isinstance(v, str):
        raise SchemaError(f"field {key!r} must be a string", path)
    return v


def _pose(doc: Any, path: str) -> Pose2:
    d = _expect_dict(doc, path)
    x = _num(d, "x", path)
    y = _num(d, "y", path)
    if "heading" in d and "heading_deg" in d:
        raise SchemaError("give either 'heading' or 'heading_deg', not both", path)
    if "heading_deg" in d:
        heading = math.radians(_num(d, "heading_deg", path))
    else:
        heading = _num(d, "heading", path, default=0.0)
    if not (math.isfinite(heading)):
        raise SchemaError("heading must be finite", path)
    return Pose2(x, y, heading)


def _body(doc: Any, path: str) -> BodyGeometry:
    d = _expect_dict(doc, path)
    return BodyGeometry(_num(d, "length", path), _num(d, "width", path))


def _point(node: Any, path: str) -> tuple[float, float]:
    pts = _expect_list(node, path)
    if len(pts) != 2 or any(isinstance(p, bool) or not isinstance(p, (int, float)) for p in pts):
        raise SchemaError("expected [x, y] numbers", path)
    return (float(pts[0]), float(pts[1]))


def _trigger(doc: Any, path: str) -> Trigger:
    d = _expect_dict(doc, path)
    kind = _text(d, "kind", path)
    if kind == "immediate":
        return Trigger("immediate")
    if kind == "at_time":
        return Trigger("at_time", time=_num(d, "time", path))
    if kind == "ego_within_radius":
        return Trigger("ego_within_radius", radius=_num(d, "radius", path))
    if kind == "ego_crosses_line":
        line = _expect_list(d.get("line"), f"{path}.line")
        if len(line) != 2:
            raise SchemaError("line must be [[x1, y1], [x2, y2]]", f"{path}.line")
        return Trigger(
            "ego_crosses_line",
            line=(_point(line[0], f"{path}.line[0]"), _point(line[1], f"{path}.line[1]")),
        )
    # Defer unknown kinds to invariant validation so they surface as rule
    # violations, not parse crashes.
    return Trigger(kind)


def _actor(doc: Any, path: str) -> ActorSpec:
    d = _expect_dict(doc, path)
    script = _expect_dict(d.get("script", {}), f"{path}.script")
    waypoints: tuple[PedestrianWaypoint, ...] = ()
    maneuvers: tuple[ManeuverL2, ...] = ()
    if "waypoints" in script:
        wps = []
        for i, node in enumerate(_expect_list(script["waypoints"], f"{path}.script.waypoints")):
            wp_path = f"{path}.script.waypoints[{i}]"
            w = _expect_dict(node, wp_path)
            wps.append(
                PedestrianWaypoint(
                    _num(w, "x", wp_path),
                    _num(w, "y", wp_path),
                    _num(w, "speed", wp_path, default=1.4),
                    _num(w, "hold", wp_path, default=0.0),
                )
            )
        waypoints = tuple(wps)
    if "maneuvers" in script:
        ms = []
        for i, node in enumerate(_expect_list(script["maneuvers"], f"{path}.script.maneuvers")):
            m_path = f"{path}.script.maneuvers[{i}]"
            m = _expect_dict(node, m_path)
            params = _expect_dict(m.get("params", {}), f"{m_path}.params")
            clean: dict[str, float] = {}
            for key in sorted(params):
                clean[key] = _num(params, key, f"{m_path}.params")
            ms.append(ManeuverL2(_text(m, "kind", m_path), clean))
        maneuvers = tuple(ms)
    return ActorSpec(
        actor_id=_text(d, "actor_id", path),
        kind=_text(d, "kind", path),
        body=_body(d.get("body"), f"{path}.body"),
        start_pose=_pose(d.get("start_pose"), f"{path}.start_pose"),
        trigger=_trigger(d.get("trigger", {"kind": "immediate"}), f"{path}.trigger"),
        waypoints=waypoints,
        maneuvers=maneuvers,
        speed_cap=_num(d, "speed_cap", path, default=30.0),
    )


def resolve_actor_refs(doc: dict, base_dir: Path | None) -> dict:
    """Inline ``{"ref": path}`` actor entries from their JSON files."""
    actors = doc.get("actors")
    if not isinstance(actors, list):
        return doc
    resolved = []
    for i, entry in enumerate(actors):
        if isinstance(entry, dict) and "ref" in entry:
            if base_dir is None:
                raise SchemaError(
                    "actor reference requires a base directory to resolve",
                    f"$.actors[{i}].ref",
                )
            ref = entry["ref"]
            if not isinstance(ref, str):
                raise SchemaError("ref must be a path string", f"$.actors[{i}].ref")
            target = Path(base_dir) / ref
            try:
                loaded = json.loads(target.read_text(encoding="utf-8"))
            except FileNotFoundError:
                raise SchemaError(f"referenced actor file not found: {target}", f"$.actors[{i}].ref") from None
            except json.JSONDecodeError as e:
                raise SchemaError(f"referenced actor file is not valid JSON: {e}", f"$.actors[{i}].ref") from None
            resolved.append(loaded)
        else:
            resolved.append(entry)
    out = dict(doc)
    out["actors"] = resolved
    return out


def scenario_from_doc(doc: Any, base_dir: Path | None = None) -> Scenario:
    """Build and validate a Scenario from a parsed JSON document."""
    d = _expect_dict(doc, "$")
    version = d.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}", "$.schema_version")
    d = resolve_actor_refs(d, base_dir)

    ego = _expect_dict(d.get("ego"), "$.ego")
    actors = []
    for i, node in enumerate(_expect_list(d.get("actors", []), "$.actors")):
        actors.append(_actor(node, f"$.actors[{i}]"))

    windows = []
    for i, node in enumerate(_expect_list(d.get("weather_windows", []), "$.weather_windows")):
        w_path = f"$.weather_windows[{i}]"
        w = _expect_dict(node, w_path)
        params = _expect_dict(w.get("params", {}), f"{w_path}.params")
        windows.append(
            WeatherWindow(
                _num(w, "start", w_path),
                _num(w, "end", w_path),
                {k: _num(params, k, f"{w_path}.params") for k in sorted(params)},
            )
        )

    lights = []
    for i, node in enumerate(_expect_list(d.get("traffic_lights", []), "$.traffic_lights")):
        l_path = f"$.traffic_lights[{i}]"
        light = _expect_dict(node, l_path)
        stop_line = _expect_list(light.get("stop_line"), f"{l_path}.stop_line")
        if len(stop_line) != 2:
            raise SchemaError("stop_line must be [[x1, y1], [x2, y2]]", f"{l_path}.stop_line")
        schedule = []
        for j, phase in enumerate(_expect_list(light.get("phase_schedule"), f"{l_path}.phase_schedule")):
            p_path = f"{l_path}.phase_schedule[{j}]"
            entry = _expect_list(phase, p_path)
            if len(entry) != 2 or not isinstance(entry[0], str):
                raise SchemaError("phase entries are [state, duration]", p_path)
            if isinstance(entry[1], bool) or not isinstance(entry[1], (int, float)):
                raise SchemaError("phase duration must be a number", p_path)
            schedule.append((entry[0], float(entry[1])))
        lights.append(
            TrafficLightConfig(
                _text(light, "light_id", l_path),
                (_point(stop_line[0], f"{l_path}.stop_line[0]"), _point(stop_line[1], f"{l_path}.stop_line[1]")),
                tuple(schedule),
            )
        )

    statics = []
    for i, node in enumerate(_expect_list(d.get("static_objects", []), "$.static_objects")):
        s_path = f"$.static_objects[{i}]"
        obj = _expect_dict(node, s_path)
        statics.append(
            StaticObject(
                _text(obj, "object_id", s_path),
                _text(obj, "kind", s_path),
                _pose(obj.get("pose"), f"{s_path}.pose"),
                _body(obj.get("body"), f"{s_path}.body"),
            )
        )

    scenario = Scenario(
        scenario_id=_text(d, "scenario_id", "$"),
        map_id=_text(d, "map_id", "$"),
        ego_start=_pose(ego.get("start"), "$.ego.start"),
        ego_destination=_point(ego.get("destination"), "$.ego.destination"),
        time_limit=_num(d, "time_limit", "$"),
        actors=tuple(actors),
        weather_windows=tuple(windows),
        traffic_lights=tuple(lights),
        static_objects=tuple(statics),
        road_speed_limit=_num(d, "road_speed_limit", "$", default=13.9),
        category=_text(d, "category", "$", default="basic_functional"),
    )
    violations = validate_scenario(scenario)
    if violations:
        raise ValidationError(violations)
    return scenario


def parse_scenario(raw_text: str, base_dir: Path | None = None) -> Scenario:
    """Parse and validate a scenario JSON document."""
    try:
        doc = json.loads(raw_text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}", "$") from None
    return scenario_from_doc(doc, base_dir)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), base_dir=path.parent)


def load_template(path: str | Path) -> dict:
    """Load a template document, inlining actor refs but keeping
    distribution nodes unsampled."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}", "$") from None
    return resolve_actor_refs(_expect_dict(doc, "$"), path.parent)


def doc_from_scenario(s: Scenario) -> dict:
    """Canonical single-file document for a scenario, every field explicit."""

    def point_doc(p) -> list[float]:
        return [float(p[0]), float(p[1])]

    def pose_doc(p: Pose2) -> dict:
        return {"x": float(p.x), "y": float(p.y), "heading": float(p.heading)}

    def body_doc(b: BodyGeometry) -> dict:
        return {"length": float(b.length), "width": float(b.width)}

    def trigger_doc(t: Trigger) -> dict:
        out: dict[str, Any] = {"kind": t.kind}
        if t.kind == "at_time":
            out["time"] = float(t.time)
        elif t.kind == "ego_within_radius":
            out["radius"] = float(t.radius)
        elif t.kind == "ego_crosses_line" and t.line is not None:
            out["line"] = [point_doc(t.line[0]), point_doc(t.line[1])]
        return out

    def actor_doc(a: ActorSpec) -> dict:
        script: dict[str, Any] = {}
        if a.waypoints:
            script["waypoints"] = [
                {"x": float(w.x), "y": float(w.y), "speed": float(w.speed), "hold": float(w.hold)}
                for w in a.waypoints
            ]
        if a.maneuvers:
            script["maneuvers"] = [
                {"kind": m.kind, "params": {k: float(v) for k, v in sorted(m.params.items())}}
                for m in a.maneuvers
            ]
        return {
            "actor_id": a.actor_id,
            "kind": a.kind,
            "body": body_doc(a.body),
            "start_pose": pose_doc(a.start_pose),
            "trigger": trigger_doc(a.trigger),
            "script": script,
            "speed_cap": float(a.speed_cap),
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "scenario_id": s.scenario_id,
        "map_id": s.map_id,
        "category": s.category,
        "time_limit": float(s.time_limit),
        "road_speed_limit": float(s.road_speed_limit),
        "ego": {
            "start": pose_doc(s.ego_start),
            "destination": point_doc(s.ego_destination),
        },
        "actors": [actor_doc(a) for a in s.actors],
        "weather_windows": [
            {
                "start": float(w.start),
                "end": float(w.end),
                "params": {k: float(v) for k, v in sorted(w.params.items())},
            }
            for w in s.weather_windows
        ],
        "traffic_lights": [
            {
                "light_id": tl.light_id,
                "stop_line": [point_doc(tl.stop_line[0]), point_doc(tl.stop_line[1])],
                "phase_schedule": [
                    [state, float(duration)] for state, duration in tl.phase_schedule
                ],
            }
            for tl in s.traffic_lights
        ],
        "static_objects": [
            {
                "object_id": o.object_id,
                "kind": o.kind,
                "pose": pose_doc(o.pose),
                "body": body_doc(o.body),
            }
            for o in s.static_objects
        ],
    }


def serialize_scenario(s: Scenario) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc_from_scenario(s), sort_keys=True, indent=2) + "\n"
