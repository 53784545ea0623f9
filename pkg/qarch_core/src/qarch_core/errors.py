"""Exception hierarchy shared by the core library and the simulation layer."""


class QarchError(Exception):
    """Base class for every error raised by qarch_core."""


class InvalidParameterError(QarchError, ValueError):
    """A rate, lifetime, probability, dimension or index is out of its domain."""


class InvalidStateError(InvalidParameterError):
    """A density matrix or pure state violates its invariants."""


class StabilityError(QarchError):
    """The mean drift condition 1/λe > 1/μe + 1/λm + 1/μm does not hold."""


class HypothesisError(QarchError):
    """Preconditions of the sufficient SD memory bound are not met."""


class EmptySampleError(QarchError):
    """A Monte Carlo estimate was requested from an empty sample set."""


class SimulationInvariantError(QarchError):
    """The event simulator observed overlapping activities or lost a request."""
