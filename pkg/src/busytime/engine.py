"""Discrete-event simulation of the online reveal protocol.

Time jumps between a finite set of event times: job reveals (release minus
lookahead), job releases, latest start times of undecided jobs, and any
wakeups a scheduler requests. Schedulers see jobs only through
:meth:`OnlineScheduler.reveal` and commit irrevocable :class:`Decision` s
from :meth:`OnlineScheduler.decide`.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Optional

from busytime.core import (
    INF,
    Assignment,
    Instance,
    Job,
    Parallelism,
    Schedule,
    ZERO,
    check_feasible,
    fmt_time,
)
from busytime.errors import DeadlineMissError, FeasibilityError, ProtocolError

log = logging.getLogger(__name__)

TraceSink = Callable[[dict], None]


@dataclass(frozen=True)
class RevealEvent:
    job: Job
    reveal_time: Fraction


@dataclass(frozen=True)
class Decision:
    job_id: int
    start: Fraction
    machine: int
    committed_at: Fraction


class OnlineScheduler:
    """Base class for online schedulers.

    Subclasses implement :meth:`decide`; the base keeps the pending set of
    revealed, undecided jobs.
    """

    name = "scheduler"

    def check(self, inst: Instance) -> None:
        """Raise :class:`~busytime.errors.PreconditionError` if ``inst`` is outside the class."""

    def start(self, g: Parallelism, lookahead: Fraction) -> None:
        self.g = g
        self.lookahead = lookahead
        self.pending: dict[int, Job] = {}

    def reveal(self, job: Job, t: Fraction) -> None:
        self.pending[job.id] = job

    def decide(self, t: Fraction) -> list[Decision]:
        raise NotImplementedError

    def wakeups(self) -> Iterable[Fraction]:
        return ()

    # helpers for subclasses

    def released(self, t: Fraction) -> list[Job]:
        return sorted((j for j in self.pending.values() if j.release <= t), key=lambda j: j.id)

    def commit(self, job: Job, start: Fraction, machine: int, t: Fraction) -> Decision:
        del self.pending[job.id]
        return Decision(job.id, start, machine, t)


class Adversary:
    """An adaptive job source that reacts to committed decisions."""

    g: Parallelism = INF
    lookahead: Fraction = ZERO
    done: bool = False

    def initial(self) -> list[Job]:
        return []

    def observe(self, decisions: list[Decision], t: Fraction) -> list[Job]:
        return []


class FixedAdversary(Adversary):
    """Releases a fixed instance up front and never reacts."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.g = inst.g
        self.lookahead = inst.lookahead
        self.done = True

    def initial(self) -> list[Job]:
        return list(self.inst.jobs)


class _Run:
    def __init__(self, g, lookahead, scheduler: OnlineScheduler, trace: Optional[TraceSink], extra_times):
        self.g = g
        self.lookahead = lookahead
        self.scheduler = scheduler
        self.trace = trace
        self.jobs: dict[int, Job] = {}
        self.order: list[int] = []
        self.unrevealed: list[tuple[Fraction, int]] = []
        self.revealed: set[int] = set()
        self.open: set[int] = set()  # revealed, undecided
        self.decisions: dict[int, Decision] = {}
        self.extra = sorted(set(extra_times or ()))
        self.now: Optional[Fraction] = None
        scheduler.start(g, lookahead)

    def emit(self, kind, payload):
        if self.trace is not None:
            self.trace({"time": fmt_time(self.now), "kind": kind, "payload": payload})

    def add_job(self, job: Job):
        if job.id in self.jobs:
            raise ProtocolError(f"duplicate job id {job.id}")
        if self.now is not None and job.release < self.now:
            raise ProtocolError(f"job {job.id} released at {job.release}, before current time {self.now}")
        self.jobs[job.id] = job
        self.order.append(job.id)
        reveal = job.release - self.lookahead
        if self.now is not None and reveal < self.now:
            reveal = self.now
        heapq.heappush(self.unrevealed, (reveal, job.id))

    def next_time(self) -> Optional[Fraction]:
        now = self.now
        cands = []
        if self.unrevealed:
            cands.append(self.unrevealed[0][0])
        for jid in self.open:
            job = self.jobs[jid]
            cands.extend((job.release, job.latest_start))
        cands.extend(self.scheduler.wakeups())
        while self.extra and now is not None and self.extra[0] <= now:
            self.extra.pop(0)
        if self.extra:
            cands.append(self.extra[0])
        future = [c for c in cands if now is None or c > now]
        return min(future) if future else None

    def reveal_due(self) -> bool:
        any_new = False
        due = []
        while self.unrevealed and self.unrevealed[0][0] <= self.now:
            due.append(heapq.heappop(self.unrevealed))
        for _, jid in sorted(due):
            job = self.jobs[jid]
            self.revealed.add(jid)
            self.open.add(jid)
            self.emit("reveal", {"id": jid, "r": fmt_time(job.release), "d": fmt_time(job.deadline),
                                 "p": fmt_time(job.processing)})
            self.scheduler.reveal(job, self.now)
            any_new = True
        return any_new

    def accept(self, decisions: list[Decision]):
        for dec in decisions:
            job = self.jobs.get(dec.job_id)
            if job is None or dec.job_id not in self.revealed:
                raise ProtocolError(f"decision for unrevealed job {dec.job_id}")
            if dec.job_id in self.decisions:
                raise ProtocolError(f"job {dec.job_id} decided twice")
            if dec.committed_at != self.now or dec.start < self.now:
                raise ProtocolError(f"job {dec.job_id}: decision at {dec.committed_at} for start {dec.start}")
            if not job.can_start(dec.start) or dec.machine < 0:
                raise FeasibilityError(
                    [f"job {dec.job_id}: start {dec.start} outside [{job.release}, {job.latest_start}]"]
                )
            self.decisions[dec.job_id] = dec
            self.open.discard(dec.job_id)
            self.emit("decision", {"id": dec.job_id, "s": fmt_time(dec.start), "machine": dec.machine})

    def check_misses(self):
        for jid in sorted(self.open):
            job = self.jobs[jid]
            if job.latest_start <= self.now:
                raise DeadlineMissError(jid, job.latest_start, self.now)

    def schedule(self) -> tuple[Instance, Schedule]:
        inst = Instance(tuple(self.jobs[j] for j in self.order), self.g, self.lookahead)
        sched = Schedule(
            inst, {jid: Assignment(jid, d.machine, d.start) for jid, d in sorted(self.decisions.items())}
        )
        violations = check_feasible(sched)
        if violations:
            raise FeasibilityError(violations)
        return inst, sched


def simulate(
    inst: Instance,
    scheduler: OnlineScheduler,
    *,
    trace: Optional[TraceSink] = None,
    extra_times: Iterable[Fraction] = (),
) -> Schedule:
    """Run ``scheduler`` on ``inst`` and return its complete schedule.

    ``extra_times`` adds wakeups where nothing should happen; it exists to
    check that a scheduler's decisions only depend on the real events.
    """
    scheduler.check(inst)
    _, sched = simulate_adaptive(FixedAdversary(inst), scheduler, budget=1, trace=trace,
                                 extra_times=extra_times, _checked=True)
    return sched


def simulate_adaptive(
    adversary: Adversary,
    scheduler: OnlineScheduler,
    budget: int = 10**6,
    *,
    trace: Optional[TraceSink] = None,
    extra_times: Iterable[Fraction] = (),
    _checked: bool = False,
) -> tuple[Instance, Schedule]:
    """Alternate scheduler decisions and adversary releases.

    After every batch of decisions committed at one event time the adversary
    is consulted, at most ``budget`` times. Returns the realized instance and
    the scheduler's schedule on it.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    run = _Run(adversary.g, adversary.lookahead, scheduler, trace, extra_times)
    for job in adversary.initial():
        run.add_job(job)
    rounds = 0
    while True:
        t = run.next_time()
        if t is None:
            break
        run.now = t
        run.emit("wakeup", {})
        while True:
            new = run.reveal_due()
            decisions = scheduler.decide(t)
            run.accept(decisions)
            released = []
            if decisions and not adversary.done and rounds < budget:
                rounds += 1
                released = adversary.observe(decisions, t)
                for job in released:
                    run.add_job(job)
            if not (new or decisions or released):
                break
        run.check_misses()
    inst, sched = run.schedule()
    if not sched.complete:
        missing = sorted(set(run.jobs) - set(run.decisions))
        raise DeadlineMissError(missing[0], run.jobs[missing[0]].latest_start, run.now)
    if not _checked:
        scheduler.check(inst)
    log.debug("simulation finished: %d jobs, %d adversary rounds", inst.n, rounds)
    return inst, sched
