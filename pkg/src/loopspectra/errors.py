"""Exception types raised across the package."""


class LoopSpectraError(Exception):
    """Base class for all package errors."""


class IncompatibleSector(LoopSpectraError):
    pass


class SizeOverflow(LoopSpectraError):
    pass


class InvalidGenerator(LoopSpectraError):
    pass


class IndexOutOfRange(LoopSpectraError):
    pass


class InvalidPartition(LoopSpectraError):
    pass


class NonPositiveK(LoopSpectraError):
    pass


class OpenBoundaryUnsupported(LoopSpectraError):
    pass


class PeriodicBoundaryUnsupported(LoopSpectraError):
    pass


class DomainMismatch(LoopSpectraError):
    pass


class NonIntegerN(LoopSpectraError):
    pass


class NoConvergence(LoopSpectraError):
    def __init__(self, iterations, best_residual, message=""):
        self.iterations = iterations
        self.best_residual = best_residual
        super().__init__(
            message or f"no convergence after {iterations} iterations "
            f"(best residual {best_residual:.3e})")


class DimensionTooSmall(LoopSpectraError):
    pass


class NonPositiveLeadingEigenvalue(LoopSpectraError):
    pass


class NOutOfRange(LoopSpectraError):
    pass


class DegenerateSizes(LoopSpectraError):
    pass


class NoBracketedPeak(LoopSpectraError):
    pass


class InsufficientPoints(LoopSpectraError):
    pass


class CapExceeded(LoopSpectraError):
    pass


class DimensionTooLarge(LoopSpectraError):
    pass


class ConfigInvalid(LoopSpectraError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class IoFailure(LoopSpectraError):
    pass


class EmptyResults(LoopSpectraError):
    pass
