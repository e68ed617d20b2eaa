"""Exception and warning types shared across the package."""


class BregfixError(Exception):
    """Base class for all library errors."""


class DomainViolation(BregfixError):
    """A point lies outside the (interior) domain required by an operation."""


class WeightError(BregfixError):
    """Averaging weights are negative or do not sum to one."""


class NumericalConsistencyError(BregfixError):
    """An internal identity failed beyond numerical tolerance, indicating a
    broken geometry or solve rather than bad user input."""


class Infeasible(BregfixError):
    """A projection target set does not intersect the geometry's domain, so
    the scalar solve cannot bracket a root."""


class UnsupportedCombination(BregfixError):
    """The requested set/geometry pair has no supported projection method."""


class NonConvergence(BregfixError):
    """An iterative subroutine exhausted its budget."""


class NewtonNonConvergence(NonConvergence):
    """The damped Newton solve inside a resolvent failed to converge."""


class NotAFixedPoint(BregfixError):
    """A point claimed as a fixed point moves under the mapping."""


class ProbeOutsideSet(BregfixError):
    """A certification probe does not belong to the target set."""


class ScheduleViolation(BregfixError):
    """A schedule coefficient left its admissible range."""


class AuditFailure(BregfixError):
    """One or more per-iteration inequality audits failed."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class ParseError(BregfixError):
    """An experiment config file could not be parsed."""


class SchemaError(BregfixError):
    """An experiment config parsed but violates the schema."""


class DimensionMismatch(SchemaError):
    """Dimensions disagree between geometry, sets, mappings, or points."""


class ScheduleWarning(UserWarning):
    """A schedule is admissible to run but outside the regime the
    convergence guarantee covers (e.g. non-vanishing anchor weight)."""
