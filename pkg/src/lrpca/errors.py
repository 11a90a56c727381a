"""Exception types raised by the public API."""


class LrpcaError(Exception):
    """Base class for all package errors."""


class InvalidInput(LrpcaError):
    """Input violates a documented precondition (shape, finiteness, emptiness)."""


class InvalidDimensions(InvalidInput):
    """Matrix is empty or shapes are inconsistent."""


class InvalidRank(LrpcaError):
    """Requested rank exceeds what the matrix dimensions admit."""


class InvalidThreshold(LrpcaError):
    """Negative soft-threshold level."""


class InvalidFraction(LrpcaError):
    """Sparsity fraction outside [0, 1]."""


class ConvergenceFailure(LrpcaError):
    """An iterative routine hit its iteration cap without converging."""


class SingularGram(LrpcaError):
    """Gram matrix factorization collapsed; signals factor degeneracy upstream."""


class MissingGroundTruth(LrpcaError):
    """Oracle threshold schedule requested without a ground-truth matrix."""


class TrainingDiverged(LrpcaError):
    """Training loss became NaN/Inf.  Carries the stage index."""

    def __init__(self, stage, message=None):
        self.stage = stage
        super().__init__(message or f"training diverged at stage {stage}")


class FormatError(LrpcaError):
    """Binary payload does not match the expected file format."""


class ParseError(LrpcaError):
    """Text records could not be parsed."""
