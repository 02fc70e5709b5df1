"""Runtime defaults and the optional vista.toml config file.

The paper-of-record values live here in one place:
- dt 0.1 s: simulation step, also the trajectory sampling step.
- a_max 3 m/s^2: ego acceleration slew bound (comfortable urban braking).
- r_goal 3 m: arrival radius on the mission destination.
These are toolkit choices, not normative; override via config or flags.

Config file precedence: command-line flag > VISTA_SEED env var (seed
only) > vista.toml [defaults] table > built-in default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import VistaError

ENV_SEED = "VISTA_SEED"


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    a_max: float = 3.0
    r_goal: float = 3.0
    ego_length: float = 4.6
    ego_width: float = 1.8


@dataclass(frozen=True)
class Defaults:
    dt: float = 0.1
    seed: int | None = None
    thresholds_path: str | None = None


def load_defaults(path: str | Path | None) -> Defaults:
    """Read the [defaults] table from a vista.toml-style file."""
    if path is None:
        candidate = Path("vista.toml")
        if not candidate.is_file():
            return Defaults()
        path = candidate
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise VistaError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise VistaError(f"config file {path} is not valid TOML: {e}") from None
    table = doc.get("defaults", {})
    dt = float(table.get("dt", 0.1))
    seed = table.get("seed")
    thresholds = table.get("thresholds")
    return Defaults(
        dt=dt,
        seed=int(seed) if seed is not None else None,
        thresholds_path=str(thresholds) if thresholds is not None else None,
    )


def resolve_seed(flag_value: int | None, defaults: Defaults) -> int:
    """Seed precedence: flag, then VISTA_SEED, then config, then 0."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise VistaError(f"{ENV_SEED} must be an integer, got {env!r}") from None
    if defaults.seed is not None:
        return defaults.seed
    return 0
