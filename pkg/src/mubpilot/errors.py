"""Exception types raised by the library."""


class MubPilotError(Exception):
    """Base class for all library errors."""


class NonPrimeDimension(MubPilotError, ValueError):
    pass


class TooManyBases(MubPilotError, ValueError):
    pass


class NotUnitary(MubPilotError, ValueError):
    pass


class DegenerateInput(MubPilotError, ValueError):
    pass


class InvalidParameter(MubPilotError, ValueError):
    pass


class DimensionMismatch(MubPilotError, ValueError):
    pass


class CapacityExceeded(MubPilotError, ValueError):
    """More users than the covariance fit can resolve (JK > Q**2)."""


class SolverFailure(MubPilotError, RuntimeError):
    """NNLS did not reach the KKT tolerance within the iteration budget."""


class InvalidBeta(MubPilotError, ValueError):
    pass


class NonPositiveNoise(MubPilotError, ValueError):
    pass


class RankDeficient(MubPilotError, RuntimeError):
    """Estimated group-a channel matrix cannot be pseudo-inverted."""


class ConfigError(MubPilotError, ValueError):
    pass
