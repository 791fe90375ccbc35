"""Exception hierarchy shared by all modules."""


class MFramesError(Exception):
    """Base class for every error raised by this package."""


class UsageError(MFramesError, ValueError):
    """Arguments that violate an operation's preconditions."""


class NegativeArgument(UsageError):
    pass


class ToleranceInvalid(UsageError):
    pass


class LengthMismatch(UsageError):
    pass


class UnboundedSupport(UsageError):
    pass


class StrategyUnsupported(UsageError):
    pass


class BandExceeded(UsageError):
    pass


class BandInsufficient(UsageError):
    pass


class UnknownAtomIndex(UsageError, KeyError):
    pass


class EmptyInput(UsageError):
    pass


class ConfigInvalid(UsageError):
    pass


class DuplicatePoints(MFramesError):
    pass


class GenerationFailed(MFramesError):
    """Lattice invariants could not be met from the candidate pool."""


class InsufficientLattice(MFramesError):
    """No positive cubature rule within tolerance exists on this lattice; refine rho."""


class CubatureFailed(MFramesError):
    """Per-scale cubature failed while building a frame or sampling scheme."""

    def __init__(self, scale, cause):
        self.scale = scale
        self.cause = cause
        where = "" if scale is None else f" at scale j={scale}"
        super().__init__(f"cubature failed{where}: {cause} (decrease the lattice constant a)")
