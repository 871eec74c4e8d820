"""Exception hierarchy for chaosctl."""


class ChaosControlError(Exception):
    """Base class for all chaosctl errors."""


class DomainError(ChaosControlError):
    """State or parameter outside the map's admissible domain."""


class UnboundedTrajectoryError(ChaosControlError):
    """A trajectory escaped the state domain beyond tolerance."""


class NoOrbitError(ChaosControlError):
    """No genuine periodic orbit of the requested period was found."""


class SingularSensitivityError(ChaosControlError):
    """Parameter sensitivity vanishes; proportional gains are undefined."""


class AmbiguousMatchError(ChaosControlError):
    """Two orbit components matched at once; activation radius too large."""


class EffortViolationError(ChaosControlError):
    """A control value exceeded the effort bound delta in strict mode."""


class ParameterRangeError(ChaosControlError):
    """Modulated parameter left the admissible range in strict mode."""


class RootConvergenceError(ChaosControlError):
    """Polynomial root iteration did not converge within the budget."""


class ConfigError(ChaosControlError):
    """Invalid experiment configuration."""
