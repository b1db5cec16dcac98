"""Exception types shared across the package.

The config-level errors (raised while reading a population description)
derive from ConfigError so the CLI can map them to a usage exit code;
everything else derives from BrpopError directly and maps to a domain
failure.
"""


class BrpopError(Exception):
    """Base class for all package errors."""


class ConfigError(BrpopError):
    """A population description could not be parsed."""


class MalformedNumber(ConfigError):
    """A rho or tau entry is not a plain decimal or num/den string."""


class ProportionsDoNotSumToOne(ConfigError):
    """Subpopulation proportions are not positive rationals summing to 1."""


class DuplicateThreshold(ConfigError):
    """Two subpopulations of the same role share a threshold."""


class ThresholdOutOfRange(ConfigError):
    """A threshold lies outside the open interval (0, 1)."""


class IndexOutOfRange(BrpopError):
    """A subpopulation or separator index is out of bounds."""


class StateOutOfSpace(BrpopError):
    """A state vector violates the box constraints of the state space."""


class StateSpaceTooLarge(BrpopError):
    """Full state-space enumeration would exceed the configured cap."""


class InvalidSize(BrpopError):
    """A population size N does not make every N*rho_k an integer."""


class AssumptionViolated(BrpopError):
    """The threshold-uniqueness assumption failed and no override was given."""


class NoProgress(BrpopError):
    """The flow integrator stalled on repeated zero-length events."""


class MalformedSet(BrpopError):
    """An equilibrium set does not have the stable/unstable interleaving."""
