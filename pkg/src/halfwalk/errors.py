"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class NotRecorded(KeyError):
    """Requested time step was not recorded by the run."""


class BudgetExceeded(RuntimeError):
    """A run would exceed its configured memory budget."""


class InvariantViolation(RuntimeError):
    """Trace or normalization drifted beyond tolerance; treat as a bug."""
