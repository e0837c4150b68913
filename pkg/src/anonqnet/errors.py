"""Exception types shared across the simulator."""


class SimulationError(RuntimeError):
    """A protocol or engine invariant was violated during a run."""


class ExactnessError(SimulationError):
    """A quantity that must be exact (up to float dust) was not."""
