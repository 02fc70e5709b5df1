"""Command-line pipeline: validate, generate, run, evaluate, report.

Exit codes: 0 on success; 1 when validation finds violations or, under
--gate, when any run times out (`run`) or any verdict is FAIL
(`evaluate`/`report`); 2 on usage or file errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import schema
from .config import Defaults, load_defaults, resolve_seed
from .errors import SchemaError, ValidationError, VistaError
from .evaluation import Annotation, Thresholds, evaluate
from .policies import builtin_policies, make_policy
from .report import build_report, write_report
from .sampling import generate_suite_docs
from .scenario import Scenario, validate_scenario
from .simlog import SimLog, parse_log
from .simulator import RunResult, run_scenario

EXIT_OK = 0
EXIT_GATE = 1
EXIT_USAGE = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def cmd_validate(args, defaults: Defaults) -> int:
    path = Path(args.scenario)
    try:
        scenario = schema.load_scenario(path)
    except FileNotFoundError:
        return _fail(f"no such file: {path}")
    except SchemaError as e:
        print(f"INVALID {path}: {e}")
        return EXIT_GATE
    except ValidationError as e:
        print(f"INVALID {path}:")
        for v in e.violations:
            print(f"  {v.rule}: {v.message}")
        return EXIT_GATE
    violations = validate_scenario(scenario)
    if violations:
        print(f"INVALID {path}:")
        for v in violations:
            print(f"  {v.rule}: {v.message}")
        return EXIT_GATE
    print(f"OK {path} ({scenario.scenario_id}, {len(scenario.actors)} actor(s))")
    return EXIT_OK


def cmd_generate(args, defaults: Defaults) -> int:
    try:
        template = schema.load_template(args.template)
    except FileNotFoundError:
        return _fail(f"no such file: {args.template}")
    except SchemaError as e:
        return _fail(str(e))
    seed = resolve_seed(args.seed, defaults)
    docs, scenarios, manifest = generate_suite_docs(template, args.n, seed)

    outdir = Path(args.output)
    (outdir / "scenarios").mkdir(parents=True, exist_ok=True)
    for doc, scenario, entry in zip(docs, scenarios, manifest.entries):
        path = outdir / entry.scenario_path
        if scenario is not None:
            path.write_text(schema.serialize_scenario(scenario), encoding="utf-8")
        else:
            path.write_text(
                json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
            )
    (outdir / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    invalid = sum(1 for e in manifest.entries if not e.valid)
    print(
        f"generated {len(manifest.entries)} scenario(s) in {outdir} "
        f"(seed {seed}, {invalid} invalid)"
    )
    return EXIT_OK


def _collect_scenarios(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise VistaError(f"no such file or directory: {path}")
    manifest_path = path / "manifest.json"
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        out = []
        for entry in manifest.get("entries", []):
            if entry.get("valid", True):
                out.append(path / entry["scenario_path"])
        return out
    return sorted(p for p in path.glob("*.json") if p.name != "manifest.json")


def _run_one(scenario_path: str, policy_name: str, dt: float, out_root: str) -> tuple[str, str]:
    scenario = schema.load_scenario(scenario_path)
    policy = make_policy(policy_name)
    result = run_scenario(scenario, policy, dt=dt)
    outdir = Path(out_root) / scenario.scenario_id
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "log.csv").write_text(result.log.to_csv(), encoding="utf-8")
    (outdir / "scenario.json").write_text(
        schema.serialize_scenario(scenario), encoding="utf-8"
    )
    meta = {
        "scenario_id": scenario.scenario_id,
        "category": scenario.category,
        "policy": policy_name,
        "dt": dt,
        "completion": result.completion,
        "completion_time": result.completion_time,
        "error": result.error,
    }
    (outdir / "run.json").write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return scenario.scenario_id, result.completion


def cmd_run(args, defaults: Defaults) -> int:
    if args.policy not in builtin_policies():
        return _fail(f"unknown policy {args.policy!r}")
    try:
        paths = _collect_scenarios(Path(args.scenario))
    except VistaError as e:
        return _fail(str(e))
    if not paths:
        return _fail(f"no scenarios found under {args.scenario}")
    dt = args.dt if args.dt is not None else defaults.dt

    jobs = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [
                pool.submit(_run_one, str(p), args.policy, dt, args.output)
                for p in paths
            ]
            jobs = [f.result() for f in futures]
    else:
        for p in paths:
            jobs.append(_run_one(str(p), args.policy, dt, args.output))

    timed_out = 0
    for scenario_id, completion in sorted(jobs):
        print(f"{scenario_id}: {completion}")
        if completion != "reached_destination":
            timed_out += 1
    print(f"ran {len(jobs)} scenario(s) with {args.policy}; {timed_out} timed out")
    if args.gate and timed_out:
        return EXIT_GATE
    return EXIT_OK


def _load_thresholds(args, defaults: Defaults) -> Thresholds:
    path = args.thresholds or defaults.thresholds_path
    if path is None:
        return Thresholds()
    return Thresholds.from_json(Path(path).read_text(encoding="utf-8"))


def _load_annotations(path: str | None) -> list[Annotation]:
    if path is None:
        return []
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, list):
        raise VistaError("annotations file must hold a JSON list")
    return [
        Annotation(
            test_case_id=str(item["test_case_id"]),
            action=str(item["action"]),
            payload=dict(item.get("payload", {})),
        )
        for item in doc
    ]


def cmd_evaluate(args, defaults: Defaults) -> int:
    results_dir = Path(args.results)
    run_files = sorted(results_dir.glob("*/run.json"))
    if not run_files:
        return _fail(f"no run.json files under {results_dir}")
    try:
        thresholds = _load_thresholds(args, defaults)
        annotations = _load_annotations(args.annotations)
    except (FileNotFoundError, VistaError, json.JSONDecodeError) as e:
        return _fail(str(e))

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for run_file in run_files:
        rundir = run_file.parent
        meta = json.loads(run_file.read_text(encoding="utf-8"))
        scenario = schema.load_scenario(rundir / "scenario.json")
        records = parse_log((rundir / "log.csv").read_text(encoding="utf-8"))
        run = RunResult(
            log=SimLog(tuple(records)),
            completion=meta["completion"],
            completion_time=meta.get("completion_time"),
            error=meta.get("error"),
        )
        test_case_id = meta.get("scenario_id", rundir.name)
        relevant = [a for a in annotations if a.test_case_id == test_case_id]
        verdict = evaluate(run, scenario, thresholds, relevant)
        doc = {
            "test_case_id": test_case_id,
            "scenario_id": scenario.scenario_id,
            "category": scenario.category,
            "policy": meta.get("policy"),
            "outcome": verdict.outcome,
            "completion": verdict.completion,
            "completion_time": verdict.completion_time,
            "findings": [f.to_doc() for f in verdict.findings],
            "notes": verdict.notes,
        }
        (outdir / f"{test_case_id}.verdict.json").write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        print(f"{test_case_id}: {verdict.outcome} ({len(verdict.findings)} finding(s))")
        if verdict.outcome == "FAIL":
            failures += 1
    print(f"evaluated {len(run_files)} run(s); {failures} FAIL")
    if args.gate and failures:
        return EXIT_GATE
    return EXIT_OK


def cmd_report(args, defaults: Defaults) -> int:
    verdicts_dir = Path(args.verdicts)
    verdict_files = sorted(verdicts_dir.glob("*.verdict.json"))
    docs = [json.loads(p.read_text(encoding="utf-8")) for p in verdict_files]
    report = build_report(docs)
    written = write_report(report, args.output, figures=not args.no_figures)
    for path in written:
        print(f"wrote {path}")
    failures = sum(1 for d in docs if d["outcome"] == "FAIL")
    if args.gate and failures:
        return EXIT_GATE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vista",
        description="Scenario-based virtual testing of automated-driving policies.",
    )
    parser.add_argument("--config", help="path to a vista.toml config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", help="sample test-case variants from a template")
    p.add_argument("template")
    p.add_argument("-n", type=int, default=10, help="number of variants")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True, help="suite output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="execute a scenario or a generated suite")
    p.add_argument("scenario", help="scenario file or suite directory")
    p.add_argument(
        "--policy",
        default="braking_follower",
        choices=sorted(builtin_policies()),
    )
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--gate", action="store_true", help="exit 1 if any run times out")
    p.add_argument("-o", "--output", required=True, help="results directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="score recorded runs into verdicts")
    p.add_argument("results", help="results directory from `vista run`")
    p.add_argument("--thresholds", help="JSON file overriding metric thresholds")
    p.add_argument("--annotations", help="JSON file of manual overrides")
    p.add_argument("--gate", action="store_true", help="exit 1 on any FAIL verdict")
    p.add_argument("-o", "--output", required=True, help="verdicts directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="aggregate verdicts into a suite report")
    p.add_argument("verdicts", help="verdicts directory from `vista evaluate`")
    p.add_argument("--gate", action="store_true", help="exit 1 on any FAIL verdict")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("-o", "--output", required=True, help="report directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help; pass through.
        return int(e.code or 0)
    try:
        defaults = load_defaults(args.config)
    except VistaError as e:
        return _fail(str(e))
    try:
        return args.func(args, defaults)
    except (SchemaError, ValidationError) as e:
        return _fail(str(e))
    except FileNotFoundError as e:
        return _fail(str(e))
    except VistaError as e:
        return _fail(str(e))


if __name__ == "__main__":
    raise SystemExit(main())
