"""Exception hierarchy shared across the package.

Numerical failures (NotPD, SingularDirection, solver breakdown) map to CLI
exit code 3; configuration problems map to exit code 2.
"""


class BanditLabError(Exception):
    """Base class for all package errors."""


class ConfigError(BanditLabError):
    """Malformed or inconsistent experiment configuration."""


class NumericalError(BanditLabError):
    """Base class for numerical failures (CLI exit code 3)."""


# --- action set / instance validation ---------------------------------------

class NormViolation(BanditLabError):
    """An action vector has Euclidean norm > 1."""


class RankDeficient(BanditLabError):
    """The action set does not span R^d."""


class DuplicateArm(BanditLabError):
    """Two action vectors coincide."""


class NonUniqueOptimum(BanditLabError):
    """Two arms tie for the minimal mean loss."""


class MeanOutOfRange(BanditLabError):
    """Some |<x, theta>| exceeds 1 (or 3/4 for perturbed parameters)."""


class LengthMismatch(BanditLabError):
    """Trace and loss-sequence lengths disagree."""


# --- linear algebra ----------------------------------------------------------

class SingularDirection(NumericalError):
    """Vector has a component outside the range of a singular design matrix."""


class NotPD(NumericalError):
    """Matrix is not positive definite where it must be."""


# --- robust estimation -------------------------------------------------------

class EmptySamples(BanditLabError):
    """Robust mean estimation called with no samples."""


class BadBounds(BanditLabError):
    """Clipping bounds with lo > hi."""


# --- optimization ------------------------------------------------------------

class EmptySubset(BanditLabError):
    """Exploration design requested over an empty arm subset."""


class NonFiniteGaps(BanditLabError):
    """Gap estimates contain NaN or infinity."""


class Unbounded(NumericalError):
    """Allocation program detected as unbounded (invalid instance)."""


class NonOrthonormal(BanditLabError):
    """Closed-form oracle used on gaps that do not describe an orthonormal set."""


# --- environments ------------------------------------------------------------

class AdmissibilityViolation(BanditLabError):
    """A corruption schedule would push some mean loss outside [-1, 1]."""


class DomainError(BanditLabError):
    """KL divergence evaluated outside (-1, 1)."""
