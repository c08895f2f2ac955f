"""Online busy-time schedulers.

* :class:`UnboundedUniform` - flag-based scheduler for equal processing
  times on machines of unbounded parallelism, parameterised by ``alpha``.
* :class:`UnboundedAgreeable` - flag-based scheduler for agreeable
  deadlines and arbitrary processing times, unbounded parallelism.
* :class:`UniformScheduler` - bundles of width two job lengths for bounded
  parallelism and equal processing times.
* :class:`OnlineGreedyTracking` - fixes every job to a rigid interval, then
  packs the rigid jobs into pairs of tracks and the tracks into bundles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from busytime.core import (
    INF,
    Instance,
    IntervalSet,
    Job,
    Parallelism,
    ZERO,
    as_time,
    classify,
    load,
)
from busytime.engine import Decision, OnlineScheduler
from busytime.errors import InvariantError, ParameterError, PreconditionError, ProtocolError

__all__ = [
    "FlagRecord",
    "Bundle",
    "Track",
    "TrackPair",
    "UnboundedUniform",
    "UnboundedAgreeable",
    "UniformScheduler",
    "OnlineGreedyTracking",
    "Fixer",
    "FlagFixer",
    "EagerFixer",
    "RigidFix",
    "fix_rigid",
    "load",
    "unbounded_uniform",
    "unbounded_agreeable",
    "uniform_scheduler",
    "online_greedy_tracking",
    "make_scheduler",
    "FIXERS",
]


@dataclass(frozen=True)
class FlagRecord:
    job_id: int
    flag_start: Fraction
    open_until: Fraction


def _require_uniform(inst: Instance) -> None:
    if not classify(inst).uniform:
        raise PreconditionError("instance is not uniform: processing times differ")


class _UniformMixin:
    p: Optional[Fraction]

    def _learn_p(self, job: Job) -> None:
        if self.p is None:
            self.p = job.processing
        elif job.processing != self.p:
            raise PreconditionError(
                f"job {job.id} has processing {job.processing}, expected uniform {self.p}"
            )


# --------------------------------------------------------------------------- unbounded uniform


class UnboundedUniform(_UniformMixin, OnlineScheduler):
    """Wait for a job to reach its latest start, then keep the machine busy
    for ``(1 + alpha)`` job lengths and start everything that fits inside.

    Processing times are taken as the common ``p`` of the instance; ``alpha``
    is measured in units of ``p``.
    """

    name = "unbounded-uniform"

    def __init__(self, alpha=0):
        alpha = as_time(alpha)
        if not (0 <= alpha < 1):
            raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
        self.alpha = alpha

    def check(self, inst: Instance) -> None:
        if inst.g != INF:
            raise PreconditionError(f"{self.name} needs unbounded parallelism, got g={inst.g}")
        _require_uniform(inst)

    def start(self, g, lookahead):
        super().start(g, lookahead)
        self.p = None
        self.busy = IntervalSet()
        self.flags: list[FlagRecord] = []

    def reveal(self, job, t):
        self._learn_p(job)
        super().reveal(job, t)

    @property
    def reserved_span(self) -> Fraction:
        """Span of the flag intervals the algorithm kept open (its own cost accounting)."""
        return self.busy.measure

    def _start_covered(self, t, out):
        for job in self.released(t):
            if self.busy.covers(t, t + self.p):
                out.append(self.commit(job, t, 0, t))

    def decide(self, t):
        out: list[Decision] = []
        self._start_covered(t, out)
        due = [j for j in self.released(t) if j.latest_start <= t]
        if due:
            flag = due[0]
            end = t + self.p * (1 + self.alpha)
            self.flags.append(FlagRecord(flag.id, t, end))
            self.busy = self.busy.insert(t, end)
            self._start_covered(t, out)
        return out


# --------------------------------------------------------------------------- unbounded agreeable


class UnboundedAgreeable(OnlineScheduler):
    """Flag at the latest start when no flag interval is open; while one is
    open, start every released job at once."""

    name = "unbounded-agreeable"

    def check(self, inst: Instance) -> None:
        if inst.g != INF:
            raise PreconditionError(f"{self.name} needs unbounded parallelism, got g={inst.g}")
        if not classify(inst).agreeable:
            raise PreconditionError("instance deadlines are not agreeable")

    def start(self, g, lookahead):
        super().start(g, lookahead)
        self.busy = IntervalSet()
        self.flags: list[FlagRecord] = []

    def flag_open(self, t: Fraction) -> bool:
        return any(f.flag_start <= t < f.open_until for f in self.flags)

    def _run(self, job, t, out):
        out.append(self.commit(job, t, 0, t))
        self.busy = self.busy.insert(t, t + job.processing)

    def decide(self, t):
        out: list[Decision] = []
        if not self.flag_open(t):
            due = [j for j in self.released(t) if j.latest_start <= t]
            if due:
                flag = due[0]
                self.flags.append(FlagRecord(flag.id, t, flag.deadline))
                self._run(flag, t, out)
        for job in self.released(t):
            if self.flag_open(t) or self.busy.covers(t, t + job.processing):
                self._run(job, t, out)
        return out


# --------------------------------------------------------------------------- bounded uniform


def max_overlap(intervals: Iterable[tuple[Fraction, Fraction]], lo: Fraction, hi: Fraction) -> int:
    """Largest number of ``intervals`` simultaneously alive inside ``[lo, hi)``."""
    ivs = [(a, b) for a, b in intervals if a < hi and b > lo]
    points = {lo} | {a for a, _ in ivs if a > lo}
    return max((sum(1 for a, b in ivs if a <= x < b) for x in points), default=0)


@dataclass
class Bundle:
    """Jobs sharing one machine. For :class:`UniformScheduler` the members all
    run inside ``[flag_start, flag_start + 2p)``."""

    id: int
    flag: FlagRecord
    machine: int
    members: list[tuple[int, Fraction, Fraction]] = field(default_factory=list)  # (job, start, end)

    @property
    def window(self) -> tuple[Fraction, Fraction]:
        return self.flag.flag_start, self.flag.open_until


class UniformScheduler(_UniformMixin, OnlineScheduler):
    """Bundle scheduler for bounded parallelism and equal processing times."""

    name = "uniform-bounded"

    def check(self, inst: Instance) -> None:
        if inst.g == INF:
            raise PreconditionError("use unbounded-uniform for unbounded parallelism")
        if inst.g < 2:
            raise PreconditionError("uniform-bounded needs g >= 2")
        _require_uniform(inst)

    def start(self, g, lookahead):
        if g == INF or g < 2:
            raise PreconditionError(f"uniform-bounded needs finite g >= 2, got {g}")
        super().start(g, lookahead)
        self.p = None
        self.bundles: list[Bundle] = []

    def reveal(self, job, t):
        self._learn_p(job)
        super().reveal(job, t)

    def _fill(self, bundle: Bundle, t: Fraction, out: list[Decision]) -> None:
        lo, hi = bundle.window
        if not (lo <= t and t + self.p <= hi):
            return
        for job in sorted(self.released(t), key=lambda j: (j.deadline, j.id)):
            spans = [(s, e) for _, s, e in bundle.members]
            if max_overlap(spans, t, t + self.p) + 1 > self.g:
                break
            out.append(self.commit(job, t, bundle.machine, t))
            bundle.members.append((job.id, t, t + self.p))

    def decide(self, t):
        out: list[Decision] = []
        for bundle in self.bundles:
            self._fill(bundle, t, out)
        while True:
            due = [j for j in self.released(t) if j.latest_start <= t]
            if not due:
                break
            flag = min(due, key=lambda j: (j.deadline, j.id))
            bundle = Bundle(len(self.bundles), FlagRecord(flag.id, t, t + 2 * self.p), len(self.bundles))
            self.bundles.append(bundle)
            out.append(self.commit(flag, t, bundle.machine, t))
            bundle.members.append((flag.id, t, t + self.p))
            self._fill(bundle, t, out)
        return out

    def wakeups(self):
        # capacity frees up when the flag's own unit ends
        return [b.flag.flag_start + self.p for b in self.bundles]


# --------------------------------------------------------------------------- fixing stage


@dataclass(frozen=True)
class RigidFix:
    job_id: int
    sigma: Fraction
    fixed_at: Fraction


class Fixer:
    """Online contract for turning flexible jobs into rigid ones.

    Runs in its own clock: :meth:`add` makes a job known, :meth:`advance`
    moves the clock forward and returns every ``(job, sigma)`` fixed on the
    way, in order. A job must be fixed no later than ``sigma``.
    """

    name = "abstract"

    def reset(self) -> None:
        self.now: Optional[Fraction] = None
        self.pending: dict[int, Job] = {}

    def add(self, job: Job) -> None:
        self.pending[job.id] = job

    def advance(self, tau: Fraction) -> list[tuple[Job, Fraction]]:
        raise NotImplementedError

    def wakeups(self) -> list[Fraction]:
        return []


class FlagFixer(Fixer):
    """Fix a job at its latest start, opening a virtual flag interval that
    later jobs are fixed inside whenever they fit completely."""

    name = "default"

    def reset(self):
        super().reset()
        self.busy = IntervalSet()

    def _step(self, e: Fraction) -> list[tuple[Job, Fraction]]:
        out = []
        # jobs that became known after their latest start get it anyway
        for job in sorted(self.pending.values(), key=lambda j: j.id):
            if job.latest_start < e:
                sigma = job.latest_start
                self.busy = self.busy.insert(sigma, job.deadline)
                out.append((job, sigma))
                del self.pending[job.id]

        def covered():
            for job in sorted(self.pending.values(), key=lambda j: j.id):
                if job.release <= e and self.busy.covers(e, e + job.processing):
                    out.append((job, e))
                    del self.pending[job.id]

        covered()
        # every job due now that no flag covers opens its own flag
        while True:
            due = sorted(
                (j for j in self.pending.values() if j.release <= e and j.latest_start == e), key=lambda j: j.id
            )
            if not due:
                return out
            flag = due[0]
            self.busy = self.busy.insert(e, flag.deadline)
            out.append((flag, e))
            del self.pending[flag.id]
            covered()

    def _events(self, tau):
        times = {tau}
        for job in self.pending.values():
            times.add(job.release)
            times.add(job.latest_start)
        return sorted(x for x in times if (self.now is None or x > self.now) and x <= tau)

    def advance(self, tau):
        out = []
        for e in self._events(tau):
            self.now = e
            out.extend(self._step(e))
        if self.now is None or tau > self.now:
            self.now = tau
        elif tau == self.now and self.pending:
            out.extend(self._step(tau))
        return out

    def wakeups(self):
        times = set()
        for job in self.pending.values():
            times.update((job.release, job.latest_start))
        return sorted(x for x in times if self.now is None or x > self.now)


class EagerFixer(Fixer):
    """Fix every job at its release time."""

    name = "eager"

    def advance(self, tau):
        out = []
        for job in sorted(self.pending.values(), key=lambda j: (j.release, j.id)):
            if job.release <= tau:
                out.append((job, max(job.release, self.now) if self.now is not None else job.release))
                del self.pending[job.id]
        self.now = tau if self.now is None else max(self.now, tau)
        return out

    def wakeups(self):
        return sorted({j.release for j in self.pending.values() if self.now is None or j.release > self.now})


FIXERS: dict[str, Callable[[], Fixer]] = {"default": FlagFixer, "eager": EagerFixer}


def _checked_fix(job: Job, sigma: Fraction) -> Job:
    if not job.can_start(sigma):
        raise ProtocolError(
            f"fixer put job {job.id} at {sigma}, outside [{job.release}, {job.latest_start}]"
        )
    return Job(job.id, sigma, sigma + job.processing, job.processing)


def fix_rigid(fixer: Fixer, inst: Instance) -> list[RigidFix]:
    """Run ``fixer`` online over ``inst`` (each job known at its release) and
    return the fixes in the order they were made."""
    fixer.reset()
    todo = sorted(inst.jobs, key=lambda j: (j.release, j.id))
    out: list[RigidFix] = []
    i = 0
    while True:
        cands = list(fixer.wakeups())
        if i < len(todo):
            cands.append(todo[i].release)
        if not cands:
            break
        tau = min(cands)
        while i < len(todo) and todo[i].release <= tau:
            fixer.add(todo[i])
            i += 1
        for job, sigma in fixer.advance(tau):
            _checked_fix(job, sigma)
            if sigma < tau:
                raise ProtocolError(f"job {job.id} fixed at {tau}, after its start {sigma}")
            out.append(RigidFix(job.id, sigma, tau))
    if len(out) != inst.n:
        raise ProtocolError("fixer left jobs unfixed")
    return out


# --------------------------------------------------------------------------- greedy tracking


@dataclass
class Track:
    """Pairwise disjoint rigid jobs, kept in start order."""

    id: int
    jobs: list[Job] = field(default_factory=list)

    @property
    def end(self) -> Optional[Fraction]:
        return self.jobs[-1].deadline if self.jobs else None

    def disjoint(self) -> bool:
        return all(a.deadline <= b.release for a, b in zip(self.jobs, self.jobs[1:]))


@dataclass
class TrackPair:
    index: int
    first: Track
    second: Track
    reserved: Optional[int] = None
    last: Optional[Job] = None
    last_track: int = 0

    @property
    def tracks(self) -> tuple[Track, Track]:
        return self.first, self.second

    def busy(self) -> IntervalSet:
        s = IntervalSet()
        for tr in self.tracks:
            for j in tr.jobs:
                s = s.insert(j.release, j.deadline)
        return s


class OnlineGreedyTracking(OnlineScheduler):
    """Rigid-job tracking with lookahead, for bounded parallelism.

    Each revealed job goes through a :class:`Fixer`, which runs ``lookahead``
    ahead of real time so a job fixed at ``sigma`` is known by
    ``sigma - lookahead``. Rigid jobs are placed into pairs of tracks: every
    pair alternately places its reserved job and reserves the next one (the
    latest-ending job overlapping the last placed job, else the earliest
    later job). A rigid job reaching its start while neither placed nor
    reserved opens a new pair. Tracks are grouped ``g`` at a time, in pair
    order, onto machines.
    """

    name = "greedy-tracking"

    def __init__(self, fixer: str | Fixer = "default"):
        if isinstance(fixer, str):
            if fixer not in FIXERS:
                raise ParameterError(f"unknown fixer {fixer!r}; choose from {sorted(FIXERS)}")
            fixer = FIXERS[fixer]()
        self.fixer = fixer

    def check(self, inst: Instance) -> None:
        if inst.g == INF or inst.g < 2:
            raise PreconditionError(f"greedy-tracking needs finite g >= 2, got g={inst.g}")
        if inst.lookahead < inst.p_max:
            raise PreconditionError(
                f"greedy-tracking needs lookahead >= p_max = {inst.p_max}, got {inst.lookahead}"
            )

    def start(self, g, lookahead):
        if g == INF or g < 2:
            raise PreconditionError(f"greedy-tracking needs finite g >= 2, got g={g}")
        super().start(g, lookahead)
        self.fixer.reset()
        self.rigid: dict[int, Job] = {}
        self.placed: set[int] = set()
        self.reserved_by: dict[int, int] = {}
        self.pairs: list[TrackPair] = []
        self.reservation_log: list[tuple[Fraction, int, Optional[int]]] = []

    def reveal(self, job, t):
        super().reveal(job, t)
        self.fixer.add(job)

    # --- bookkeeping

    def machine_of(self, pair: TrackPair, track: int) -> int:
        return (2 * pair.index + track) // int(self.g)

    def tracks(self) -> list[Track]:
        return [tr for p in self.pairs for tr in p.tracks]

    def bundles(self) -> dict[int, list[Track]]:
        out: dict[int, list[Track]] = {}
        for p in self.pairs:
            for k, tr in enumerate(p.tracks):
                out.setdefault(self.machine_of(p, k), []).append(tr)
        return out

    def _free(self, t: Fraction, rank: Optional[int] = None) -> list[Job]:
        """Unplaced rigid jobs not yet started, minus those reserved by pairs
        ranked before ``rank`` (by any pair when ``rank`` is None)."""
        return [
            j for jid, j in self.rigid.items()
            if jid not in self.placed and j.release >= t
            and (jid not in self.reserved_by or (rank is not None and self.reserved_by[jid] >= rank))
        ]

    def _choose(self, pair: TrackPair, t: Fraction) -> Optional[Job]:
        busy = pair.busy()
        # take over a later pair's reservation only if it extends this pair
        pool = [
            j for j in self._free(t, pair.index)
            if self.reserved_by.get(j.id) in (None, pair.index) or not busy.covers(j.release, j.deadline)
        ]
        last = pair.last
        target = pair.tracks[1 - pair.last_track]
        floor = target.end
        fits = [j for j in pool if floor is None or j.release >= floor]
        overlapping = [j for j in fits if j.release <= last.deadline]
        if overlapping:
            return min(overlapping, key=lambda j: (-j.deadline, j.release, j.id))
        later = [j for j in fits if j.release > last.deadline]
        if later:
            return min(later, key=lambda j: (j.release, j.id))
        return None

    def _reserve(self, pair: TrackPair, t: Fraction) -> None:
        choice = self._choose(pair, t)
        new = choice.id if choice is not None else None
        if new == pair.reserved:
            return
        if pair.reserved is not None:
            del self.reserved_by[pair.reserved]
        pair.reserved = new
        if new is not None:
            holder = self.reserved_by.get(new)
            if holder is not None:  # taken over from a later pair
                self.pairs[holder].reserved = None
                self.reservation_log.append((t, holder, None))
            self.reserved_by[new] = pair.index
        self.reservation_log.append((t, pair.index, new))

    def _place(self, pair: TrackPair, job: Job, track: int, t: Fraction, out: list[Decision]) -> None:
        tr = pair.tracks[track]
        if tr.end is not None and tr.end > job.release:
            raise InvariantError(f"job {job.id} overlaps track {tr.id}")
        tr.jobs.append(job)
        pair.last = job
        pair.last_track = track
        self.placed.add(job.id)
        out.append(self.commit(self.pending[job.id], job.release, self.machine_of(pair, track), t))

    def _serve(self, pair: TrackPair, t: Fraction, out: list[Decision]) -> None:
        while True:
            self._reserve(pair, t)
            if pair.reserved is None or self.rigid[pair.reserved].release != t:
                return
            jid = pair.reserved
            if self.reserved_by.get(jid) != pair.index:
                raise InvariantError(f"job {jid} placed without reservation")
            del self.reserved_by[jid]
            pair.reserved = None
            self._place(pair, self.rigid[jid], 1 - pair.last_track, t, out)

    def decide(self, t):
        for job, sigma in self.fixer.advance(t + self.lookahead):
            rigid = _checked_fix(job, sigma)
            if sigma < t:
                raise ProtocolError(f"job {job.id} fixed to {sigma} after that time passed")
            self.rigid[job.id] = rigid
        out: list[Decision] = []
        for pair in self.pairs:
            self._serve(pair, t, out)
        while True:
            starting = [j for j in self._free(t) if j.release == t]
            if not starting:
                break
            job = min(starting, key=lambda j: (-j.deadline, j.id))
            k = len(self.pairs)
            pair = TrackPair(k, Track(2 * k), Track(2 * k + 1))
            self.pairs.append(pair)
            self._place(pair, job, 0, t, out)
            self._serve(pair, t, out)
        return out

    def wakeups(self):
        times = [x - self.lookahead for x in self.fixer.wakeups()]
        times.extend(j.release for jid, j in self.rigid.items() if jid not in self.placed)
        return times


# --------------------------------------------------------------------------- factories


def unbounded_uniform(alpha=0) -> UnboundedUniform:
    return UnboundedUniform(alpha)


def unbounded_agreeable() -> UnboundedAgreeable:
    return UnboundedAgreeable()


def uniform_scheduler() -> UniformScheduler:
    return UniformScheduler()


def online_greedy_tracking(fixer: str | Fixer = "default") -> OnlineGreedyTracking:
    return OnlineGreedyTracking(fixer)


def make_scheduler(spec: str) -> OnlineScheduler:
    """Build a scheduler from a selection string.

    ``unbounded-uniform:alpha=1/2``, ``unbounded-agreeable``,
    ``uniform-bounded``, ``greedy-tracking`` or ``greedy-tracking:fixer=eager``.
    """
    name, _, rest = spec.strip().partition(":")
    params = {}
    for part in filter(None, rest.split(",")):
        key, eq, value = part.partition("=")
        if not eq:
            raise ParameterError(f"malformed parameter {part!r} in {spec!r}")
        params[key.strip()] = value.strip()
    builders = {
        "unbounded-uniform": lambda alpha="0": UnboundedUniform(as_time(alpha)),
        "unbounded-agreeable": lambda: UnboundedAgreeable(),
        "uniform-bounded": lambda: UniformScheduler(),
        "greedy-tracking": lambda fixer="default": OnlineGreedyTracking(fixer),
    }
    if name not in builders:
        raise ParameterError(f"unknown algorithm {name!r}; choose from {sorted(builders)}")
    try:
        return builders[name](**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {name}: {params}") from exc
