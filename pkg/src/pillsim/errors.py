"""Exception types shared across the simulator."""


class PillsimError(Exception):
    """Base class for all simulator errors."""


class InvalidScheduleError(PillsimError):
    """A schedule failed validation where a valid one is required."""

    def __init__(self, violations):
        self.violations = list(violations)
        codes = ", ".join(v.code for v in self.violations)
        super().__init__(f"invalid schedule: {codes}")


class InvalidRangeError(PillsimError):
    """A time range was given with start after end."""


class TimeRegressionError(PillsimError):
    """A log append carried a timestamp earlier than the previous record."""


class UnknownCompartmentError(PillsimError):
    """A compartment index outside 1..3 was used."""


class DriverBusyError(PillsimError):
    """A blocking modem operation was requested while one is in flight."""
