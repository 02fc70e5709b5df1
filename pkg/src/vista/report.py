"""Suite-level reporting: outcome distribution and issue ledger.

Inputs are per-test verdict documents; outputs are a machine-readable
report.json, a per-category outcome histogram as CSV, and matplotlib
renderings of the same aggregates as PNG files written alongside the
delimited output. All artifacts are deterministic for fixed inputs
(figures are rendered on the Agg backend with date metadata stripped).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .scenario import CATEGORIES

OUTCOMES = ("PASS", "PASS_NC", "FAIL")


@dataclass(frozen=True)
class ReportRow:
    test_case_id: str
    category: str
    outcome: str
    completion_time: float | None
    finding_counts: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class Issue:
    """Distinct failure pattern across FAIL verdicts (metric x subject)."""

    metric_id: str
    subject: str
    occurrences: int
    test_case_ids: tuple[str, ...]


@dataclass(frozen=True)
class SuiteReport:
    rows: tuple[ReportRow, ...]
    outcome_by_category: dict[str, dict[str, int]]
    issues: tuple[Issue, ...]

    @property
    def total(self) -> int:
        return len(self.rows)

    def to_doc(self) -> dict:
        return {
            "total": self.total,
            "rows": [
                {
                    "test_case_id": r.test_case_id,
                    "category": r.category,
                    "outcome": r.outcome,
                    "completion_time": r.completion_time,
                    "finding_counts": dict(sorted(r.finding_counts.items())),
                }
                for r in self.rows
            ],
            "outcome_by_category": self.outcome_by_category,
            "issues": [
                {
                    "metric_id": i.metric_id,
                    "subject": i.subject,
                    "occurrences": i.occurrences,
                    "test_case_ids": list(i.test_case_ids),
                }
                for i in self.issues
            ],
        }


def build_report(verdict_docs: list[dict]) -> SuiteReport:
    """Aggregate verdict documents into a suite report.

    Every verdict lands in exactly one row; category counts therefore sum
    to the number of evaluated tests.
    """
    rows = []
    for doc in sorted(verdict_docs, key=lambda d: d.get("test_case_id", "")):
        counts: dict[str, int] = {}
        for f in doc.get("findings", []):
            counts[f["metric_id"]] = counts.get(f["metric_id"], 0) + 1
        rows.append(
            ReportRow(
                test_case_id=doc.get("test_case_id", "unknown"),
                category=doc.get("category", "basic_functional"),
                outcome=doc["outcome"],
                completion_time=doc.get("completion_time"),
                finding_counts=counts,
            )
        )

    categories = list(CATEGORIES) + sorted(
        {r.category for r in rows} - set(CATEGORIES)
    )
    histogram = {c: {o: 0 for o in OUTCOMES} for c in categories}
    for r in rows:
        histogram[r.category][r.outcome] += 1

    patterns: dict[tuple[str, str], list[str]] = {}
    for doc in verdict_docs:
        if doc["outcome"] != "FAIL":
            continue
        tc = doc.get("test_case_id", "unknown")
        for f in doc.get("findings", []):
            patterns.setdefault((f["metric_id"], f["subject"]), []).append(tc)
    issues = tuple(
        Issue(metric, subject, len(tcs), tuple(sorted(set(tcs))))
        for (metric, subject), tcs in sorted(patterns.items())
    )
    return SuiteReport(tuple(rows), histogram, issues)


def histogram_csv(report: SuiteReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["category", "pass", "pass_nc", "fail", "total"])
    for category, counts in report.outcome_by_category.items():
        writer.writerow(
            [
                category,
                counts["PASS"],
                counts["PASS_NC"],
                counts["FAIL"],
                sum(counts.values()),
            ]
        )
    return buf.getvalue()


def _render_figures(report: SuiteReport, outdir: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    categories = list(report.outcome_by_category)
    colors = {"PASS": "#2a9d4e", "PASS_NC": "#e0a800", "FAIL": "#d04038"}

    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    bottoms = [0] * len(categories)
    for outcome in OUTCOMES:
        values = [report.outcome_by_category[c][outcome] for c in categories]
        ax.bar(
            range(len(categories)), values, bottom=bottoms,
            label=outcome, color=colors[outcome], width=0.6,
        )
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_xticks(range(len(categories)))
    ax.set_xticklabels([c.replace("_", "\n") for c in categories], fontsize=8)
    ax.set_ylabel("test cases")
    ax.set_title("Outcome distribution by test objective")
    ax.legend()
    if bottoms:
        ax.set_ylim(0, max(max(bottoms), 1) * 1.15)
    fig.tight_layout()
    path = outdir / "outcome_distribution.png"
    fig.savefig(path, dpi=120, metadata={"Date": None})
    plt.close(fig)
    written.append(path)

    totals: dict[str, int] = {}
    for row in report.rows:
        for metric, count in row.finding_counts.items():
            totals[metric] = totals.get(metric, 0) + count
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    metrics = sorted(totals)
    ax.barh(range(len(metrics)), [totals[m] for m in metrics], color="#40668c")
    ax.set_yticks(range(len(metrics)))
    ax.set_yticklabels(metrics, fontsize=8)
    ax.set_xlabel("findings across the suite")
    ax.set_title("Findings by metric")
    fig.tight_layout()
    path = outdir / "findings_by_metric.png"
    fig.savefig(path, dpi=120, metadata={"Date": None})
    plt.close(fig)
    written.append(path)
    return written


def write_report(report: SuiteReport, outdir: str | Path, figures: bool = True) -> list[Path]:
    """Write report.json, the histogram CSV and the rendered figures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    json_path = outdir / "report.json"
    json_path.write_text(
        json.dumps(report.to_doc(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    written.append(json_path)
    csv_path = outdir / "outcomes_by_category.csv"
    csv_path.write_text(histogram_csv(report), encoding="utf-8")
    written.append(csv_path)
    if figures:
        written.extend(_render_figures(report, outdir))
    return written
