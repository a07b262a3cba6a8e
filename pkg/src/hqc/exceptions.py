"""Exception types shared across the solvers."""


class DomainError(ValueError):
    """A potential was evaluated outside its admissible domain."""


class SolverFailure(RuntimeError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class StabilityError(RuntimeError):
    """A stability requirement failed (singular operator, invalid microstructure,
    or a nonpositive nearest-neighbor dominance margin)."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
