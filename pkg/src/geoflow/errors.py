"""Exception and warning types raised across the package."""


class GeoflowError(Exception):
    """Base class for all package errors."""


class SpecMismatch(GeoflowError):
    """Operands belong to different Lie algebras."""


class NumericalFailure(GeoflowError):
    """An eigensolver or matrix function failed to converge."""


class RankMismatch(GeoflowError):
    """Sampled rank of an algebra disagrees with its closed form."""


class NotRegular(GeoflowError):
    """An element expected to be regular has a too-large centralizer."""


class NotCartan(GeoflowError):
    """A subspace expected to be a Cartan subalgebra is not commutative."""


class InvalidParameters(GeoflowError):
    """Scenario or operator parameters are inconsistent."""


class ToleranceAmbiguity(GeoflowError):
    """Singular values sit too close to the rank threshold to decide a rank."""

    def __init__(self, message, singular_values=None, threshold=None):
        super().__init__(message)
        self.singular_values = singular_values
        self.threshold = threshold


class HypothesisFailed(GeoflowError):
    """No sampled horizontal vector is regular."""


class InvalidConfig(GeoflowError):
    """A run configuration failed schema validation."""


class DegenerateVertical(UserWarning):
    """Some generators of a two-sided action vanish at the identity."""
