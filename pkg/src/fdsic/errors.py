"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SimulationError):
    """Invalid configuration or malformed input data."""


class NumericalError(SimulationError):
    """A numerical operation failed (non-finite value, bad pivot, divergence)."""


class TuningError(SimulationError):
    """The RF canceller tuner could not evaluate the objective."""
