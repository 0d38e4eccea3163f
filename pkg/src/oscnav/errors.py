"""Exception types shared across the package."""


class OscnavError(Exception):
    """Base class for all package errors."""


class NonPositiveFrequency(OscnavError):
    """A boundary frequency or step duration that must be > 0 is not."""


class NonFiniteEntry(OscnavError):
    """A pulse amplitude is NaN or infinite."""


class IndivisibleChunking(OscnavError):
    """Requested chunk count does not divide the number of pulses."""


class NegativeOccupation(OscnavError):
    """Initial mean particle number must be >= 0."""


class EmptyProtocol(OscnavError):
    """Operation requires at least one pulse."""


class NonSymplectic(OscnavError):
    """A matrix that must have unit determinant does not."""


class NotASolution(OscnavError):
    """Navigation requires a protocol already below the infidelity threshold."""


class RestartBudgetExhausted(OscnavError):
    """No solution found within the configured number of random restarts."""


class CorrectorFailed(OscnavError):
    """Infidelity could not be restored below threshold during navigation."""
