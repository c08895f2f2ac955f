"""Exact time arithmetic, jobs, instances, interval sets and schedules.

All times are :class:`fractions.Fraction`. Parallelism is a positive ``int``
or :data:`INF` for machines that may run any number of jobs at once.
"""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from itertools import groupby
from typing import Iterable, Mapping, NamedTuple, Sequence, Union

from busytime.errors import FeasibilityError, InvalidInputError

Time = Fraction
TimeLike = Union[Fraction, int, str, Decimal, float]
Parallelism = Union[int, float]

INF: float = math.inf
ZERO = Fraction(0)


def as_time(value: TimeLike) -> Fraction:
    """Convert ``value`` to an exact :class:`Fraction`.

    Accepts ints, Fractions, Decimals, strings such as ``"3"``, ``"0.25"`` or
    ``"7/4"``, and floats (taken at their shortest decimal repr, not their
    binary expansion).
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidInputError(f"not a time value: {value!r}")
    if isinstance(value, (int, Decimal)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InvalidInputError(f"time must be finite, got {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InvalidInputError(f"cannot parse time {value!r}") from exc
    raise InvalidInputError(f"not a time value: {value!r}")


def fmt_time(t: Fraction) -> str:
    """Fraction string, ``"3/2"`` or ``"2"``."""
    return str(t)


def as_parallelism(value) -> Parallelism:
    if value is None or value == "inf" or value == INF:
        return INF
    if isinstance(value, str):
        value = value.strip()
        if value.lower() in ("inf", "infinity", "unbounded"):
            return INF
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise InvalidInputError(f"parallelism must be a positive int or 'inf', got {value!r}")
    return value


def fmt_parallelism(g: Parallelism) -> Union[int, str]:
    return "inf" if g == INF else int(g)


# --------------------------------------------------------------------------- jobs


@dataclass(frozen=True, order=True)
class Job:
    """A job with release time, deadline and processing time.

    The job must run non-preemptively for ``processing`` time units inside
    ``[release, deadline)``.
    """

    id: int
    release: Fraction
    deadline: Fraction
    processing: Fraction

    def __post_init__(self):
        object.__setattr__(self, "release", as_time(self.release))
        object.__setattr__(self, "deadline", as_time(self.deadline))
        object.__setattr__(self, "processing", as_time(self.processing))
        if isinstance(self.id, bool) or not isinstance(self.id, int):
            raise InvalidInputError(f"job id must be an int, got {self.id!r}")
        if self.processing <= 0:
            raise InvalidInputError(f"job {self.id}: processing time must be positive")
        if self.release >= self.deadline:
            raise InvalidInputError(f"job {self.id}: release must precede deadline")
        if self.processing > self.deadline - self.release:
            raise InvalidInputError(f"job {self.id}: window shorter than processing time")

    @property
    def latest_start(self) -> Fraction:
        return self.deadline - self.processing

    @property
    def rigid(self) -> bool:
        return self.processing == self.deadline - self.release

    def can_start(self, s: Fraction) -> bool:
        return self.release <= s <= self.latest_start

    def scaled(self, factor: Fraction) -> "Job":
        return Job(self.id, self.release * factor, self.deadline * factor, self.processing * factor)


@dataclass(frozen=True)
class Instance:
    """A job set with the machines' parallelism ``g`` and the lookahead."""

    jobs: tuple[Job, ...]
    g: Parallelism = INF
    lookahead: Fraction = ZERO

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "g", as_parallelism(self.g))
        object.__setattr__(self, "lookahead", as_time(self.lookahead))
        if self.lookahead < 0:
            raise InvalidInputError("lookahead must be non-negative")
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("job ids must be unique")

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def p_max(self) -> Fraction:
        return max((j.processing for j in self.jobs), default=ZERO)

    def job(self, job_id: int) -> Job:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise KeyError(job_id)

    def by_id(self) -> dict[int, Job]:
        return {j.id: j for j in self.jobs}

    def with_jobs(self, jobs: Iterable[Job]) -> "Instance":
        return Instance(tuple(jobs), self.g, self.lookahead)

    def scaled(self, factor: TimeLike) -> "Instance":
        factor = as_time(factor)
        return Instance(tuple(j.scaled(factor) for j in self.jobs), self.g, self.lookahead * factor)


# --------------------------------------------------------------------------- intervals


class IntervalSet:
    """Canonical union of half-open intervals ``[lo, hi)``.

    Intervals are kept sorted, disjoint and non-adjacent, so two sets with
    the same union compare equal.
    """

    __slots__ = ("_iv",)

    def __init__(self, intervals: Iterable[tuple[TimeLike, TimeLike]] = ()):
        out = IntervalSet._empty()
        for lo, hi in intervals:
            out = out.insert(lo, hi)
        self._iv: tuple[tuple[Fraction, Fraction], ...] = out._iv if out is not None else ()

    @classmethod
    def _empty(cls) -> "IntervalSet":
        obj = object.__new__(cls)
        obj._iv = ()
        return obj

    @classmethod
    def _raw(cls, iv) -> "IntervalSet":
        obj = object.__new__(cls)
        obj._iv = tuple(iv)
        return obj

    @property
    def intervals(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return self._iv

    def __iter__(self):
        return iter(self._iv)

    def __len__(self):
        return len(self._iv)

    def __bool__(self):
        return bool(self._iv)

    def __eq__(self, other):
        return isinstance(other, IntervalSet) and self._iv == other._iv

    def __hash__(self):
        return hash(self._iv)

    def __repr__(self):
        body = ", ".join(f"[{lo}, {hi})" for lo, hi in self._iv)
        return f"IntervalSet({{{body}}})"

    def insert(self, lo: TimeLike, hi: TimeLike) -> "IntervalSet":
        lo, hi = as_time(lo), as_time(hi)
        if lo >= hi:
            raise InvalidInputError(f"empty or reversed interval [{lo}, {hi})")
        iv = self._iv
        # first interval whose hi >= lo (touching counts, to merge adjacency)
        i = bisect.bisect_left([h for _, h in iv], lo)
        j = i
        while j < len(iv) and iv[j][0] <= hi:
            lo = min(lo, iv[j][0])
            hi = max(hi, iv[j][1])
            j += 1
        return IntervalSet._raw(iv[:i] + ((lo, hi),) + iv[j:])

    def covers(self, lo: Fraction, hi: Fraction) -> bool:
        """True iff ``[lo, hi)`` lies inside the union."""
        if lo >= hi:
            return True
        i = bisect.bisect_right([l for l, _ in self._iv], lo) - 1
        return i >= 0 and self._iv[i][1] >= hi

    def contains(self, t: Fraction) -> bool:
        i = bisect.bisect_right([l for l, _ in self._iv], t) - 1
        return i >= 0 and t < self._iv[i][1]

    @property
    def measure(self) -> Fraction:
        return sum((hi - lo for lo, hi in self._iv), ZERO)

    @property
    def lo(self) -> Fraction:
        return self._iv[0][0]

    @property
    def hi(self) -> Fraction:
        return self._iv[-1][1]


def span(s: IntervalSet) -> Fraction:
    """Lebesgue measure of the union represented by ``s``."""
    return s.measure


def union_insert(s: IntervalSet, lo: TimeLike, hi: TimeLike) -> IntervalSet:
    return s.insert(lo, hi)


# --------------------------------------------------------------------------- schedules


@dataclass(frozen=True)
class Assignment:
    job_id: int
    machine: int
    start: Fraction

    def __post_init__(self):
        object.__setattr__(self, "start", as_time(self.start))
        if self.machine < 0:
            raise InvalidInputError("machine index must be non-negative")


@dataclass(frozen=True)
class Violation:
    job_id: int
    kind: str  # "window" | "concurrency" | "missing" | "unknown"
    detail: str

    def __str__(self):
        return f"job {self.job_id}: {self.kind} ({self.detail})"


@dataclass(frozen=True)
class Schedule:
    """Assignment of jobs to (machine, start time) for an instance."""

    instance: Instance
    assignments: Mapping[int, Assignment] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))

    @classmethod
    def from_starts(cls, instance: Instance, starts: Mapping[int, TimeLike], machines=None):
        machines = machines or {}
        return cls(
            instance,
            {jid: Assignment(jid, machines.get(jid, 0), as_time(s)) for jid, s in starts.items()},
        )

    def intervals(self) -> dict[int, list[tuple[Fraction, Fraction, int]]]:
        """Per machine, the list of ``(start, end, job_id)`` sorted by start."""
        jobs = self.instance.by_id()
        per: dict[int, list] = defaultdict(list)
        for a in self.assignments.values():
            per[a.machine].append((a.start, a.start + jobs[a.job_id].processing, a.job_id))
        return {m: sorted(v) for m, v in sorted(per.items())}

    def machine_busy(self) -> dict[int, IntervalSet]:
        out = {}
        for m, ivs in self.intervals().items():
            s = IntervalSet._empty()
            for lo, hi, _ in ivs:
                s = s.insert(lo, hi)
            out[m] = s
        return out

    @property
    def complete(self) -> bool:
        return set(self.assignments) == {j.id for j in self.instance.jobs}


def check_feasible(sched: Schedule) -> list[Violation]:
    """Every violated window or parallelism constraint; empty iff feasible.

    Missing jobs are only reported as violations of completeness, so partial
    schedules can still be checked for the constraints they do cover.
    """
    jobs = sched.instance.by_id()
    out: list[Violation] = []
    for jid in sorted(sched.assignments):
        a = sched.assignments[jid]
        job = jobs.get(jid)
        if job is None:
            out.append(Violation(jid, "unknown", "job not in instance"))
            continue
        if not job.can_start(a.start):
            out.append(
                Violation(
                    jid,
                    "window",
                    f"start {a.start} outside [{job.release}, {job.latest_start}], "
                    f"completes at {a.start + job.processing} vs deadline {job.deadline}",
                )
            )
    for jid in sorted(set(jobs) - set(sched.assignments)):
        out.append(Violation(jid, "missing", "job not assigned"))

    g = sched.instance.g
    if g != INF:
        for m, ivs in sched.intervals().items():
            events = []
            for lo, hi, jid in ivs:
                if jid in jobs:
                    events.append((lo, 1, jid))
                    events.append((hi, 0, jid))
            # ends (0) sort before starts (1) at equal times: half-open intervals
            events.sort()
            running = 0
            for t, kind, jid in events:
                running += 1 if kind else -1
                if running > g:
                    out.append(
                        Violation(jid, "concurrency", f"machine {m} runs {running} > g={g} jobs at t={t}")
                    )
    return out


def busy_time(sched: Schedule) -> Fraction:
    """Sum over machines of the span of that machine's job intervals."""
    violations = check_feasible(sched)
    if violations:
        raise FeasibilityError(violations)
    return raw_busy_time(sched)


def raw_busy_time(sched: Schedule) -> Fraction:
    """Busy time without the feasibility check."""
    return sum((span(s) for s in sched.machine_busy().values()), ZERO)


# --------------------------------------------------------------------------- predicates


class Classification(NamedTuple):
    uniform: bool
    agreeable: bool
    rigid: bool


def is_agreeable(jobs: Sequence[Job]) -> bool:
    # no pair with r_i < r_j and d_i > d_j; equal releases may come in any order
    earlier_max = None
    for _, group in groupby(sorted(jobs, key=lambda j: j.release), key=lambda j: j.release):
        deadlines = [j.deadline for j in group]
        if earlier_max is not None and earlier_max > min(deadlines):
            return False
        top = max(deadlines)
        earlier_max = top if earlier_max is None else max(earlier_max, top)
    return True


def classify(inst: Instance) -> Classification:
    jobs = inst.jobs
    return Classification(
        uniform=len({j.processing for j in jobs}) <= 1,
        agreeable=is_agreeable(jobs),
        rigid=all(j.rigid for j in jobs),
    )


def load(jobs: Iterable[Job]) -> Fraction:
    """Total processing time of ``jobs``."""
    return sum((j.processing for j in jobs), ZERO)


def independent_half(values: Sequence[TimeLike]) -> list[int]:
    """Indices with no two consecutive whose values sum to at least half the total.

    Picks the heavier of the even-index and odd-index subsets.
    """
    if not values:
        raise InvalidInputError("independent_half needs at least one value")
    vals = [as_time(v) for v in values]
    if any(v < 0 for v in vals):
        raise InvalidInputError("values must be non-negative")
    even = list(range(0, len(vals), 2))
    odd = list(range(1, len(vals), 2))
    if sum((vals[i] for i in odd), ZERO) > sum((vals[i] for i in even), ZERO):
        return odd
    return even
