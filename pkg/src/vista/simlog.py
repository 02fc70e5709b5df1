"""Tabular run log: one row per entity per simulation step.

CSV header (exact): sim_time,entity_id,entity_type,x,y,heading,speed,length,width
UTF-8, '.' decimal separator, LF line endings. Floats are written with
Python's shortest round-trip repr so a parsed log reproduces the
in-memory values bit for bit.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

from .errors import FormatError

CSV_HEADER = "sim_time,entity_id,entity_type,x,y,heading,speed,length,width"
ENTITY_TYPES = ("ego", "actor", "static")


@dataclass(frozen=True)
class StepRecord:
    sim_time: float
    entity_id: str
    entity_type: str
    x: float
    y: float
    heading: float
    speed: float
    length: float
    width: float


@dataclass(frozen=True)
class SimLog:
    records: tuple[StepRecord, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.records:
            buf.write(
                f"{r.sim_time!r},{r.entity_id},{r.entity_type},{r.x!r},{r.y!r},"
                f"{r.heading!r},{r.speed!r},{r.length!r},{r.width!r}\n"
            )
        return buf.getvalue()


def parse_log(csv_text: str) -> list[StepRecord]:
    """Parse a run log; raises FormatError with the offending line number."""
    lines = csv_text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise FormatError(
            f"header must be exactly {CSV_HEADER!r}", line=1 if lines else None
        )
    records: list[StepRecord] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise FormatError(f"expected 9 columns, got {len(parts)}", line=lineno)
        entity_id, entity_type = parts[1], parts[2]
        if entity_type not in ENTITY_TYPES:
            raise FormatError(f"unknown entity_type {entity_type!r}", line=lineno)
        try:
            nums = [float(parts[i]) for i in (0, 3, 4, 5, 6, 7, 8)]
        except ValueError as e:
            raise FormatError(f"bad numeric value: {e}", line=lineno) from None
        if not all(math.isfinite(v) for v in nums):
            raise FormatError("non-finite value", line=lineno)
        records.append(
            StepRecord(nums[0], entity_id, entity_type, *nums[1:])
        )
    records.sort(key=lambda r: r.sim_time)
    return records


def group_steps(records: list[StepRecord]) -> list[tuple[float, StepRecord, list[StepRecord]]]:
    """Group records by timestep as (time, ego record, other records).

    Requires exactly one ego row per timestep.
    """
    by_time: dict[float, list[StepRecord]] = {}
    order: list[float] = []
    for r in records:
        if r.sim_time not in by_time:
            by_time[r.sim_time] = []
            order.append(r.sim_time)
        by_time[r.sim_time].append(r)
    order.sort()
    steps = []
    for t in order:
        rows = by_time[t]
        egos = [r for r in rows if r.entity_type == "ego"]
        if len(egos) != 1:
            raise FormatError(f"expected exactly one ego row at t={t}, got {len(egos)}")
        others = sorted(
            (r for r in rows if r.entity_type != "ego"), key=lambda r: r.entity_id
        )
        steps.append((t, egos[0], others))
    return steps
