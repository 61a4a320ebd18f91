class ConfigError(ValueError):
    """Invalid scenario or parameter configuration."""


class ProtocolError(RuntimeError):
    """A message the protocol requires is missing."""


class DeadlockFault(ProtocolError):
    """A synchronous barrier can never release because a message was lost."""

    def __init__(self, iteration, missing, waited):
        self.iteration = iteration
        self.missing = sorted(missing)
        self.waited = waited
        super().__init__(
            f"barrier for iteration {iteration} timed out after {waited:g} s; "
            f"missing announcements from ships {self.missing}"
        )


class SolverError(RuntimeError):
    """The local solver produced a non-finite objective."""
