"""Exception types shared across the library."""


class BarrierFemError(Exception):
    """Base class for all library errors."""


class InvalidGeometry(BarrierFemError):
    """Mesh generator preconditions violated (e.g. r_in >= r_out)."""


class ParseError(BarrierFemError):
    """Malformed mesh or config file.

    Carries the 1-based line number where parsing failed.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(BarrierFemError):
    """Mesh invariants violated; message lists every violation found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class Unsupported(BarrierFemError):
    """Requested feature outside the tabulated/implemented range."""


class NonpositiveState(BarrierFemError):
    """An operation requiring u > 0 was evaluated at a nonpositive state."""


class CoefficientViolation(BarrierFemError):
    """A coefficient field violated its sign constraint at an evaluation point."""


class DimensionMismatch(BarrierFemError):
    """Linear-algebra operands have incompatible shapes."""


class LineSearchFailure(BarrierFemError):
    """Backtracking exhausted its halvings without sufficient decrease."""


class UnknownExample(BarrierFemError):
    """Built-in example id outside 1..4."""


class ConfigError(BarrierFemError):
    """Bad experiment config (unknown key or invalid value).

    Carries the 1-based line number of the offending entry when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidRange(BarrierFemError):
    """Sampling range is empty or not strictly positive."""
