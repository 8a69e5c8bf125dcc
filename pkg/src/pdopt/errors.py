"""Exception hierarchy shared by all pdopt modules."""

from __future__ import annotations


class PdoptError(Exception):
    """Base class for all pdopt errors."""


class InvariantViolation(PdoptError, ValueError):
    """A domain invariant was violated.

    Carries the offending field (e.g. ``"omega_l[0][1]"``) and the rule it
    broke, so callers can surface precise diagnostics.
    """

    def __init__(self, field: str, rule: str | None = None):
        self.field = field
        self.rule = rule
        super().__init__(field if rule is None else f"{field}: {rule}")


class MalformedFile(PdoptError):
    """A project file could not be read as structured input."""


class DegenerateSpectrum(PdoptError):
    """Left/right dominant eigenvectors could not be certified.

    Raised when both power iteration and the dense eigensolver fail the
    residual checks, e.g. when the spectral radius is attained by several
    Jordan blocks. Callers fall back to finite differences.
    """


class Infeasible(PdoptError):
    """A performance target is unreachable even at maximum investment."""


class Uncalibratable(PdoptError):
    """No coupling scale reaches feasibility-index one for this graph."""
