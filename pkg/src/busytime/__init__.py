"""Online busy-time scheduling: schedulers, adversaries and exact oracles."""

from busytime.core import (
    INF,
    Assignment,
    Classification,
    Instance,
    IntervalSet,
    Job,
    Schedule,
    Violation,
    as_time,
    busy_time,
    check_feasible,
    classify,
    independent_half,
    load,
    span,
    union_insert,
)
from busytime.engine import Adversary, Decision, OnlineScheduler, RevealEvent, simulate, simulate_adaptive

__version__ = "0.1.0"
