"""Exception types raised by diamondcap."""


class DiamondCapError(Exception):
    """Base class for all library errors."""


class DomainError(DiamondCapError, ValueError):
    """An argument lies outside the domain of the function."""


class SingularityError(DiamondCapError, ArithmeticError):
    """A covariance block needed for a Gaussian computation is singular."""


class InfeasibleError(DiamondCapError):
    """No feasible point was found by the optimizer."""


class DegenerateConstructionError(DiamondCapError):
    """A coefficient construction is undefined for the given parameters."""


class ConfigError(DiamondCapError, ValueError):
    """A simulation or sweep configuration is invalid."""
