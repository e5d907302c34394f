"""Exception types shared across the package."""


class KlmsError(Exception):
    """Base class for numerical and usage errors raised by klmskit."""


class DimensionMismatchError(KlmsError):
    """Operands have incompatible shapes or dimensions."""


class SingularMatrixError(KlmsError):
    """A required matrix factorization failed (non-positive pivot or singular)."""


class IllConditionedError(KlmsError):
    """A matrix exceeds the supported condition-number range."""


class NonFiniteError(KlmsError):
    """Filter weights became non-finite or exceeded the divergence cap."""


class DivergedError(KlmsError):
    """An iterative recursion blew up (mean-square instability at this step size)."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UnstableError(KlmsError):
    """An operation requiring stability was called on an unstable model."""


class HorizonMismatchError(KlmsError):
    """Two curves being compared have different lengths."""


class ConfigError(KlmsError):
    """Invalid or missing run configuration."""
