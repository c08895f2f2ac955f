"""Adaptive lower-bound adversaries and random instance generators."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from busytime.core import INF, Instance, Job, ZERO, as_parallelism, as_time
from busytime.engine import Adversary, Decision
from busytime.errors import InvalidInputError, ParameterError

#: rational stand-in for sqrt(2) - 1, within 1e-6
SQRT2_MINUS_1 = Fraction(414214, 10**6)


def latest_decision(decisions: list[Decision]) -> Decision:
    """The decision with the largest start; ties go to the largest job id."""
    return max(decisions, key=lambda d: (d.start, d.job_id))


@dataclass
class Thm1State:
    k: int
    epsilon: Fraction
    component: int = 1
    flag_id: int = 1
    flag_deadline: Fraction = Fraction(1)
    promotions: int = 0
    latest: Optional[Decision] = None
    flags: list[int] = field(default_factory=lambda: [1])


class Thm1Adversary(Adversary):
    """Component-building adversary for equal-length jobs, unbounded parallelism.

    Starts with a rigid unit job on ``[0, 1)``. After each decision batch it
    looks at the latest started job ``j``: if ``j`` started before the current
    flag's deadline it releases a unit job at ``s_j + epsilon`` due at
    ``3i`` (``i`` the component index); otherwise ``j`` becomes the next
    flag, the component index advances, and the new job is due at ``3i``
    for the new ``i``. It stops releasing after ``k`` promotions.
    """

    g = INF
    lookahead = ZERO

    def __init__(self, k: int, epsilon=None, lookahead=ZERO):
        if k < 2:
            raise ParameterError("k must be at least 2")
        epsilon = Fraction(1, k * k) if epsilon is None else as_time(epsilon)
        if not (0 < epsilon < Fraction(1, k)):
            raise ParameterError(f"epsilon must lie in (0, 1/k), got {epsilon}")
        self.state = Thm1State(k, epsilon)
        self.lookahead = as_time(lookahead)
        self.done = False
        self._next_id = 2
        self.deadlines: dict[int, Fraction] = {1: Fraction(1)}

    def initial(self):
        return [Job(1, 0, 1, 1)]

    def _job(self, release, deadline) -> Job:
        job = Job(self._next_id, release, deadline, 1)
        self.deadlines[job.id] = job.deadline
        self._next_id += 1
        return job

    def observe(self, decisions, t):
        st = self.state
        j = latest_decision(decisions)
        st.latest = j
        if j.start < st.flag_deadline:
            return [self._job(j.start + st.epsilon, 3 * st.component)]
        st.promotions += 1
        st.component += 1
        st.flag_id = j.job_id
        st.flag_deadline = self.deadlines[j.job_id]
        st.flags.append(j.job_id)
        if st.promotions >= st.k:
            self.done = True
            return []
        return [self._job(j.start + st.epsilon, 3 * st.component)]


@dataclass
class Lemma5State:
    alpha: Fraction
    phase: str = "waiting"  # waiting -> released | held
    s2: Optional[Fraction] = None


class Lemma5Adversary(Adversary):
    """Two-branch adversary for equal-length jobs on machines with ``g = 2``.

    Releases ``j1 = (0, 1, 1)`` and ``j2 = (0, 3, 1)``. If ``j2`` starts at
    ``s2 <= alpha``, releases a rigid ``j3`` on ``[s2, s2 + 1)`` and
    ``j4 = (2, 3, 1)``; otherwise nothing more.
    """

    def __init__(self, alpha=SQRT2_MINUS_1, g: int = 2, lookahead=ZERO):
        alpha = as_time(alpha)
        if not (0 <= alpha <= 1):
            raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
        self.state = Lemma5State(alpha)
        self.g = as_parallelism(g)
        self.lookahead = as_time(lookahead)
        self.done = False

    def initial(self):
        return [Job(1, 0, 1, 1), Job(2, 0, 3, 1)]

    def observe(self, decisions, t):
        st = self.state
        for d in decisions:
            if d.job_id != 2:
                continue
            st.s2 = d.start
            self.done = True
            if d.start <= st.alpha:
                st.phase = "released"
                return [Job(3, d.start, d.start + 1, 1), Job(4, 2, 3, 1)]
            st.phase = "held"
            return []
        return []


def lemma5_bound(alpha: Fraction) -> Fraction:
    """The ratio the two-branch construction forces: min(1 + a, (3 + a) / (2 + a))."""
    return min(1 + alpha, (3 + alpha) / (2 + alpha))


def thm1_adversary(k: int, epsilon=None) -> Thm1Adversary:
    return Thm1Adversary(k, epsilon)


def lemma5_adversary(alpha=SQRT2_MINUS_1, lookahead=ZERO) -> Lemma5Adversary:
    return Lemma5Adversary(alpha, lookahead=lookahead)


# --------------------------------------------------------------------------- random instances

CLASSES = ("uniform", "agreeable", "arbitrary", "rigid")


def gen_random(
    seed: int,
    n: int,
    cls: str = "arbitrary",
    g=INF,
    horizon=8,
    *,
    denominator: int = 1,
    max_p=3,
    lookahead=None,
) -> Instance:
    """Random instance on the grid ``1/denominator`` inside ``[0, horizon]``.

    ``uniform`` uses unit jobs, ``rigid`` sets ``d = r + p``, ``agreeable``
    makes deadlines non-decreasing in release order. ``lookahead`` defaults
    to zero, or to ``p_max`` when given as ``"pmax"``.
    """
    if n < 1:
        raise InvalidInputError("n must be at least 1")
    if cls not in CLASSES:
        raise InvalidInputError(f"unknown class {cls!r}; choose from {CLASSES}")
    horizon = as_time(horizon)
    if horizon <= 0:
        raise InvalidInputError("horizon must be positive")
    rng = random.Random(seed)
    unit = Fraction(1, denominator)
    steps = int(horizon / unit)
    max_p = min(as_time(max_p), horizon) if cls != "uniform" else Fraction(1)
    if cls == "uniform" and horizon < 1:
        raise InvalidInputError("horizon shorter than a unit job")
    p_steps = int(max_p / unit)
    if p_steps < 1:
        raise InvalidInputError("no processing time fits the grid and horizon")

    raw = []
    for _ in range(n):
        p = 1 if cls == "uniform" else unit * rng.randint(1, p_steps)
        ps = int(p / unit)
        r = unit * rng.randint(0, steps - ps)
        slack = 0 if cls == "rigid" else unit * rng.randint(0, steps - int(r / unit) - ps)
        raw.append([r, r + p + slack, Fraction(p)])
    if cls == "agreeable":
        raw.sort(key=lambda x: x[0])
        top = ZERO
        for x in raw:
            x[1] = max(x[1], top)
            top = x[1]
    jobs = tuple(Job(i + 1, r, d, p) for i, (r, d, p) in enumerate(raw))
    if lookahead == "pmax":
        lookahead = max(j.processing for j in jobs)
    return Instance(jobs, as_parallelism(g), as_time(lookahead or 0))
