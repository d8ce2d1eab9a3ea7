"""Exception types shared across the package."""


class SimulationDivergence(RuntimeError):
    """A non-finite value appeared in the simulated state."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class FingerprintMismatch(ValueError):
    """A Q-table was built for a different discretization grid."""


class ConfigError(ValueError):
    """Invalid or unknown configuration entry."""
