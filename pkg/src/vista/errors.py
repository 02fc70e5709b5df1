"""Exception hierarchy shared across the toolkit."""


class VistaError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(VistaError):
    """A document is structurally invalid (missing or ill-typed field).

    Carries the JSON path of the offending node in ``path``.
    """

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationError(VistaError):
    """A well-formed document violates a domain invariant.

    ``violations`` holds the full list of rule violations found.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        rules = ", ".join(v.rule for v in self.violations)
        super().__init__(f"invariant violation(s): {rules}")


class UnsupportedManeuver(VistaError):
    """A maneuver kind has no known expansion or waypoint conversion."""


class InvalidParams(VistaError):
    """Maneuver or smoothing parameters violate their invariants."""


class SingularSystem(VistaError):
    """Boundary-value solve is ill-posed (bad duration or non-finite input)."""


class PolicyError(VistaError):
    """The ego policy callback raised; the run is aborted."""


class FormatError(VistaError):
    """A log file does not match the documented tabular format.

    ``line`` is the 1-based line number of the offending row, when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
