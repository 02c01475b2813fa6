"""Exception types shared across the toolkit."""


class EdpcError(Exception):
    """Base class for all toolkit errors."""


class InvalidInstance(EdpcError):
    """The input graph or demand list violates a precondition."""


class RetryBudgetExceeded(EdpcError):
    """A randomized procedure exhausted its retry budget."""


class PostVerificationFailed(EdpcError):
    """An a-posteriori check of a heuristic construction failed."""


class InstanceTooLargeForExactOracle(EdpcError):
    """Exact enumeration was requested above the configured size limit."""


class ViolationCheckFailed(EdpcError):
    """A claimed violating partition does not satisfy its arithmetic."""


class IterationInfeasible(EdpcError):
    """The iteration machinery cannot proceed on this instance at the
    configured scale and no certified outcome (violation / cut) exists."""


class PhaseStuck(EdpcError):
    """A phase could not terminate within its potential-bounded budget."""
