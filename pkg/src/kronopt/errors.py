"""Exception types shared across the library."""


class KronoptError(Exception):
    """Base class for all library errors."""


class NonFiniteError(KronoptError, ValueError):
    """An input contains NaN or Inf entries."""


class DimensionMismatchError(KronoptError, ValueError):
    """Operand shapes are incompatible with the operation."""


# Tensor-shaped variant of the same failure; kept as an alias so callers can
# catch either name.
ShapeMismatchError = DimensionMismatchError


class SingularWithoutDampingError(KronoptError, ValueError):
    """An inverse root was requested with zero damping on a singular matrix."""


class ZeroMatrixError(KronoptError, ValueError):
    """An operation that needs a nonzero matrix received the zero matrix."""


class ZeroVarianceError(KronoptError, ValueError):
    """A second-moment entry is zero where the first moment is not."""


class ZeroDirectionError(KronoptError, ValueError):
    """Magnitude transfer was requested onto a zero direction."""


class RankDeficientError(KronoptError, ValueError):
    """An operation that needs a full-rank matrix received a rank-deficient one."""


class StateMissingError(KronoptError, ValueError):
    """Preconditioner state is absent or inconsistent with the requested kind."""


class NotConvergedError(KronoptError, RuntimeError):
    """A fixed-point or descent solve did not reach its tolerance."""


class OptimizerDidNotConvergeError(NotConvergedError):
    """The numeric minimizer inside a verification oracle did not converge."""


class DivergenceDetectedError(KronoptError, RuntimeError):
    """Training loss became non-finite; carries the partial trace."""

    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []
