"""Reproducible parameter sampling and test-suite generation.

Scenario templates may declare any numeric parameter as a distribution;
generation draws every such parameter and emits N fully concrete
scenario variants plus a manifest recording the sampled bindings.

Reproducibility contract: results depend only on (template, seed, n).
Draws come from SplitMix64, a fixed 64-bit generator implemented here in
plain integer arithmetic so manifests are identical across platforms and
interpreter versions (the host language's default RNG is deliberately
not used). Entry i draws from its own child stream keyed by (seed, i),
so growing a suite never changes the variants already generated.
Draw counts per distribution are fixed: constant 0, uniform 1, choice 1,
normal 2 (Box-Muller; clamped, never rejected, so the count stays fixed).
See docs/determinism.md.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from .errors import SchemaError, ValidationError
from .scenario import Scenario

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 stream; state advances by the 64-bit golden gamma."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_uint64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return _mix64(self.state)

    def next_unit(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_uint64() >> 11) * 2.0**-53


def child_rng(seed: int, index: int) -> SplitMix64:
    """Independent stream for suite entry `index` under `seed`."""
    return SplitMix64(_mix64((seed + _GAMMA * (index + 1)) & _MASK64))


@dataclass(frozen=True)
class ParamValue:
    """A literal number or a named distribution over numbers."""

    kind: str  # literal | constant | uniform | normal | choice
    value: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf
    mean: float = 0.0
    sd: float = 0.0
    values: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    @staticmethod
    def literal(v: float) -> "ParamValue":
        return ParamValue("literal", value=float(v))

    @staticmethod
    def constant(v: float) -> "ParamValue":
        return ParamValue("constant", value=float(v))

    @staticmethod
    def uniform(lo: float, hi: float) -> "ParamValue":
        if not lo <= hi:
            raise ValueError(f"uniform: lo must be <= hi, got [{lo}, {hi}]")
        return ParamValue("uniform", lo=float(lo), hi=float(hi))

    @staticmethod
    def normal(mean: float, sd: float, lo: float = -math.inf, hi: float = math.inf) -> "ParamValue":
        if sd < 0:
            raise ValueError(f"normal: sd must be >= 0, got {sd}")
        if not lo <= hi:
            raise ValueError(f"normal: lo must be <= hi, got [{lo}, {hi}]")
        return ParamValue("normal", mean=float(mean), sd=float(sd), lo=float(lo), hi=float(hi))

    @staticmethod
    def choice(values, weights=None) -> "ParamValue":
        values = tuple(float(v) for v in values)
        if not values:
            raise ValueError("choice: values must be non-empty")
        if weights is None:
            weights = tuple(1.0 for _ in values)
        else:
            weights = tuple(float(w) for w in weights)
        if len(weights) != len(values):
            raise ValueError("choice: weights must match values")
        if any(w < 0 for w in weights) or sum(weights) <= 0:
            raise ValueError("choice: weights must be >= 0 with a positive sum")
        return ParamValue("choice", values=values, weights=weights)


def sample_param(p: ParamValue, rng: SplitMix64) -> float:
    """Draw one value; advances `rng` by the documented draw count."""
    if p.kind in ("literal", "constant"):
        return p.value
    if p.kind == "uniform":
        return p.lo + rng.next_unit() * (p.hi - p.lo)
    if p.kind == "normal":
        u1 = rng.next_unit()
        u2 = rng.next_unit()
        z = math.sqrt(-2.0 * math.log(max(u1, 5e-324))) * math.cos(math.tau * u2)
        return min(max(p.mean + p.sd * z, p.lo), p.hi)
    if p.kind == "choice":
        u = rng.next_unit() * sum(p.weights)
        acc = 0.0
        for v, w in zip(p.values, p.weights):
            acc += w
            if u < acc:
                return v
        return p.values[-1]
    raise ValueError(f"unknown ParamValue kind {p.kind!r}")


def is_distribution_node(node: Any) -> bool:
    return isinstance(node, dict) and "dist" in node


def param_from_node(node: Any, path: str = "$") -> ParamValue:
    """Build a ParamValue from a JSON node (plain number or dist object)."""
    if isinstance(node, bool) or not isinstance(node, (int, float, dict)):
        raise SchemaError("expected a number or distribution object", path)
    if isinstance(node, (int, float)):
        return ParamValue.literal(node)
    dist = node.get("dist")
    try:
        if dist == "constant":
            return ParamValue.constant(_num(node, "value", path))
        if dist == "uniform":
            return ParamValue.uniform(_num(node, "lo", path), _num(node, "hi", path))
        if dist == "normal":
            return ParamValue.normal(
                _num(node, "mean", path),
                _num(node, "sd", path),
                float(node.get("lo", -math.inf)),
                float(node.get("hi", math.inf)),
            )
        if dist == "choice":
            return ParamValue.choice(node.get("values", ()), node.get("weights"))
    except ValueError as e:
        raise SchemaError(str(e), path) from None
    raise SchemaError(f"unknown distribution {dist!r}", path)


def _num(node: dict, key: str, path: str) -> float:
    if key not in node:
        raise SchemaError(f"distribution is missing {key!r}", path)
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"distribution field {key!r} must be a number", path)
    return float(v)


def sample_document(template: Any, rng: SplitMix64, path: str = "$") -> tuple[Any, dict[str, float]]:
    """Replace every distribution node in a JSON document with a draw.

    The walk order is deterministic: dict keys sorted, list items in
    order. Returns the concrete document plus path -> value bindings.
    """
    bindings: dict[str, float] = {}

    def walk(node: Any, p: str) -> Any:
        if is_distribution_node(node):
            value = sample_param(param_from_node(node, p), rng)
            bindings[p] = value
            return value
        if isinstance(node, dict):
            return {key: walk(node[key], f"{p}.{key}") for key in sorted(node)}
        if isinstance(node, list):
            return [walk(item, f"{p}[{i}]") for i, item in enumerate(node)]
        return node

    return walk(template, path), bindings


@dataclass(frozen=True)
class SuiteEntry:
    test_case_id: str
    bindings: dict[str, float]
    scenario_path: str
    valid: bool = True
    error: str | None = None


@dataclass(frozen=True)
class SuiteManifest:
    suite_id: str
    template_id: str
    seed: int
    n: int
    entries: tuple[SuiteEntry, ...] = ()

    def to_doc(self) -> dict:
        return {
            "suite_id": self.suite_id,
            "template_id": self.template_id,
            "seed": self.seed,
            "n": self.n,
            "entries": [
                {
                    "test_case_id": e.test_case_id,
                    "bindings": e.bindings,
                    "scenario_path": e.scenario_path,
                    "valid": e.valid,
                    "error": e.error,
                }
                for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True, indent=2) + "\n"


def generate_suite_docs(
    template_doc: dict, n: int, seed: int, suite_id: str | None = None
) -> tuple[list[dict], list[Scenario | None], SuiteManifest]:
    """Sample `n` concrete scenario variants from a template document.

    The template must already have actor references inlined (see
    schema.load_template). Variants that violate scenario invariants are
    kept and flagged invalid in the manifest rather than dropped, so a
    bad parameter range stays visible in the audit trail; their raw
    sampled documents are still returned for writing.
    """
    from . import schema

    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    template_id = str(template_doc.get("scenario_id", "template"))
    if suite_id is None:
        suite_id = f"{template_id}-s{seed}"

    docs: list[dict] = []
    scenarios: list[Scenario | None] = []
    entries: list[SuiteEntry] = []
    for i in range(n):
        rng = child_rng(seed, i)
        doc, bindings = sample_document(template_doc, rng)
        tc_id = f"{template_id}_{i:04d}"
        doc["scenario_id"] = tc_id
        rel_path = f"scenarios/{tc_id}.json"
        docs.append(doc)
        try:
            scenario = schema.scenario_from_doc(doc)
            scenarios.append(scenario)
            entries.append(SuiteEntry(tc_id, bindings, rel_path))
        except (SchemaError, ValidationError) as e:
            scenarios.append(None)
            entries.append(SuiteEntry(tc_id, bindings, rel_path, valid=False, error=str(e)))
    manifest = SuiteManifest(suite_id, template_id, seed, n, tuple(entries))
    return docs, scenarios, manifest


def generate_suite(
    template_doc: dict, n: int, seed: int, suite_id: str | None = None
) -> tuple[list[Scenario | None], SuiteManifest]:
    """Concrete scenario variants plus their manifest; see generate_suite_docs."""
    _, scenarios, manifest = generate_suite_docs(template_doc, n, seed, suite_id)
    return scenarios, manifest
