"""Exception types raised by the estimators and solvers."""


class TwToaError(Exception):
    """Base class for all package errors."""


class RankDeficient(TwToaError):
    """Design matrix columns are numerically dependent."""


class NoRoot(TwToaError):
    """The secular equation has no sign change inside the admissible interval."""


class IllConditioned(TwToaError):
    """A linear solve inside a solver failed or was unreliable."""


class Degenerate(TwToaError):
    """An estimate left the valid parameter domain (e.g. non-positive alpha)."""


class NonFinite(TwToaError):
    """An objective or iterate overflowed to inf/nan."""


class Singular(TwToaError):
    """Fisher information is singular (target coincides with an anchor)."""


class ConfigError(TwToaError):
    """Invalid experiment or scenario configuration."""

    def __init__(self, field, message, line=None):
        self.field = field
        self.line = line
        where = f"line {line}, " if line is not None else ""
        super().__init__(f"{where}field '{field}': {message}")


class ExperimentFailure(TwToaError):
    """Too many estimator failures in a Monte Carlo run."""
