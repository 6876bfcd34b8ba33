"""Exception hierarchy shared by all vpfield modules."""


class VpfieldError(Exception):
    """Base class for every error raised by this package."""


class BadExtent(VpfieldError):
    """Grid box bounds are not ordered (lo >= hi) or counts are too small."""


class BudgetExceeded(VpfieldError):
    """Requested grid would exceed the configured node budget."""


class DomainError(VpfieldError):
    """Arguments fall outside the mathematical domain of an operation."""


class SingularPoint(VpfieldError):
    """Unmollified interaction kernel evaluated at the origin."""


class GridMismatch(VpfieldError):
    """Two fields that must share a grid do not."""


class NonFiniteForce(VpfieldError):
    """A force sampler produced NaN or Inf."""


class NonFiniteField(VpfieldError):
    """A field operation produced NaN or Inf."""


class BlowUp(VpfieldError):
    """Solver guard tripped: non-finite values or runaway norm growth.

    Carries the partial trajectory computed so far in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class NoContraction(VpfieldError):
    """Picard distances stopped decreasing; the interval is too long.

    Carries the partial trajectory and the distance log.
    """

    def __init__(self, message, partial=None, log=None):
        super().__init__(message)
        self.partial = partial
        self.log = log


class ConfigError(VpfieldError):
    """Base class for configuration problems."""


class ParseError(ConfigError):
    """Config file is syntactically malformed; carries line/column."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    """Config parsed but violates constraints; carries all violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
