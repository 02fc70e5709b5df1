"""vista: scenario-based virtual testing of automated-driving policies.

Pipeline: author scenarios as JSON (or templates with distribution
parameters), generate deterministic test-case variants, execute them in
a fixed-step kinematic simulator against a pluggable ego policy, then
evaluate the logged runs into PASS / PASS_NC / FAIL verdicts and
suite-level reports.
"""

from .errors import (
    FormatError,
    InvalidParams,
    PolicyError,
    SchemaError,
    SingularSystem,
    UnsupportedManeuver,
    ValidationError,
    VistaError,
)
from .geometry import BodyGeometry, Pose2, wrap_angle
from .maneuvers import (
    ManeuverL1,
    ManeuverL2,
    compile_actor,
    expand_l2,
    l1_to_keywaypoint,
    local_to_global,
)
from .sampling import ParamValue, SplitMix64, SuiteManifest, generate_suite, sample_param
from .scenario import (
    ActorSpec,
    PedestrianWaypoint,
    Scenario,
    StaticObject,
    TrafficLightConfig,
    Trigger,
    Violation,
    WeatherWindow,
    validate_scenario,
)
from .schema import load_scenario, parse_scenario, serialize_scenario
from .simulator import RunResult, run_scenario, step
from .smoothing import (
    BoundaryState,
    KeyWaypoint,
    QuinticSegment,
    TimedTrajectory,
    smooth,
    solve_quintic_segment,
)
from .policies import BrakingFollower, EgoPolicy, WaypointFollower, builtin_policies
from .evaluation import (
    Annotation,
    Finding,
    Thresholds,
    Verdict,
    behavior_findings,
    clearance_series,
    detect_collisions,
    evaluate,
    parse_log,
    speed_violations,
    temporal_gap_series,
    ttc_series,
)
from .report import SuiteReport, build_report, write_report

__version__ = "0.1.0"

__all__ = [
    "ActorSpec",
    "Annotation",
    "BodyGeometry",
    "BoundaryState",
    "BrakingFollower",
    "EgoPolicy",
    "Finding",
    "FormatError",
    "InvalidParams",
    "KeyWaypoint",
    "ManeuverL1",
    "ManeuverL2",
    "ParamValue",
    "PedestrianWaypoint",
    "PolicyError",
    "Pose2",
    "QuinticSegment",
    "RunResult",
    "Scenario",
    "SchemaError",
    "SingularSystem",
    "SplitMix64",
    "StaticObject",
    "SuiteManifest",
    "SuiteReport",
    "Thresholds",
    "TimedTrajectory",
    "TrafficLightConfig",
    "Trigger",
    "UnsupportedManeuver",
    "ValidationError",
    "Verdict",
    "Violation",
    "VistaError",
    "WaypointFollower",
    "WeatherWindow",
    "behavior_findings",
    "build_report",
    "builtin_policies",
    "clearance_series",
    "compile_actor",
    "detect_collisions",
    "evaluate",
    "expand_l2",
    "generate_suite",
    "l1_to_keywaypoint",
    "load_scenario",
    "local_to_global",
    "parse_log",
    "parse_scenario",
    "run_scenario",
    "sample_param",
    "serialize_scenario",
    "smooth",
    "solve_quintic_segment",
    "speed_violations",
    "step",
    "temporal_gap_series",
    "ttc_series",
    "validate_scenario",
    "wrap_angle",
    "write_report",
]
