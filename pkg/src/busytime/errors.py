"""Exception hierarchy shared by every busytime module."""

from __future__ import annotations


class BusyTimeError(Exception):
    """Base class for all errors raised by busytime."""


class InvalidInputError(BusyTimeError, ValueError):
    """Malformed job, interval, instance, or argument."""


class ParameterError(InvalidInputError):
    """An algorithm or adversary parameter is out of range."""


class PreconditionError(BusyTimeError):
    """An instance does not belong to the class an algorithm requires."""


class FeasibilityError(BusyTimeError):
    """A schedule violates a job window or a machine's parallelism."""

    def __init__(self, violations):
        self.violations = list(violations)
        first = self.violations[0] if self.violations else None
        super().__init__(f"infeasible schedule: {first}")


class SimulationError(BusyTimeError):
    """The online protocol was broken during a simulation run."""


class DeadlineMissError(SimulationError):
    def __init__(self, job_id: int, latest_start, time):
        self.job_id = job_id
        super().__init__(
            f"job {job_id} still undecided at t={time}, latest start was {latest_start}"
        )


class ProtocolError(SimulationError):
    """A scheduler or adversary emitted something the protocol forbids."""


class InvariantError(BusyTimeError):
    """An internal algorithm invariant failed; indicates a bug."""


class SizeError(BusyTimeError):
    """An exact oracle was asked to solve an instance above its cap."""


class ConstructionError(BusyTimeError):
    """A proof-derived schedule construction produced an infeasible result."""
