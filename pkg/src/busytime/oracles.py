"""Exact offline optima for small instances, plus lower bounds.

Unbounded parallelism
    An optimal schedule's busy set is a union of disjoint stretches. A set of
    jobs fits into one stretch ``[a, b)`` iff ``a <= min(d - p)`` and
    ``b >= max(r + p)`` and ``b - a >= max p``, so its cheapest stretch has
    length ``max(max p, max(r + p) - min(d - p))``. The optimum is the
    cheapest partition of the jobs into stretches, found by a subset DP.

Bounded parallelism
    Cheapest partition of the jobs into machines. A machine holding at most
    ``g`` jobs costs its unbounded optimum; larger machines are searched
    exhaustively over candidate start times. Candidate starts come from the
    closure ``{a + sum(+-p_k)}`` anchored at window endpoints: sliding any job
    until one of its endpoints meets another job's endpoint or its window
    boundary never increases the span, and chaining such contacts from a
    window endpoint adds or subtracts each job length at most once.

:func:`grid_optimum` is an independent brute force over a fine time grid,
used to cross-check both.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

from busytime.core import (
    INF,
    Assignment,
    Instance,
    IntervalSet,
    Job,
    Parallelism,
    Schedule,
    ZERO,
    as_parallelism,
    check_feasible,
    classify,
    independent_half,
    load,
    raw_busy_time,
)
from busytime.errors import ConstructionError, InvalidInputError, PreconditionError, SizeError

DEFAULT_CAPS = {"unbounded": 8, "bounded": 7, "agreeable": 10, "grid": 6}


def oracle_cap(kind: str, cap: Optional[int] = None) -> int:
    """Job-count cap for oracle ``kind``; ``BUSYTIME_ORACLE_CAP`` overrides defaults."""
    if cap is not None:
        return cap
    env = os.environ.get("BUSYTIME_ORACLE_CAP")
    if env:
        return int(env)
    return DEFAULT_CAPS[kind]


def _check_size(inst: Instance, kind: str, cap: Optional[int]) -> None:
    limit = oracle_cap(kind, cap)
    if inst.n > limit:
        raise SizeError(f"{kind} oracle refuses {inst.n} jobs (cap {limit})")


# --------------------------------------------------------------------------- unbounded


def stretch(jobs: Sequence[Job]) -> tuple[Fraction, Fraction]:
    """Shortest ``[a, b)`` into which all ``jobs`` fit, one machine, no concurrency limit."""
    a = min(j.latest_start for j in jobs)
    b = max(max(j.release + j.processing for j in jobs), a + max(j.processing for j in jobs))
    return a, b


def _place_in(jobs: Sequence[Job], a: Fraction) -> dict[int, Fraction]:
    return {j.id: max(a, j.release) for j in jobs}


def _unbounded_cost(jobs: Sequence[Job]) -> Fraction:
    a, b = stretch(jobs)
    return b - a


def _best_partition(n: int, cost) -> tuple[Fraction, list[int]]:
    """Minimum over set partitions of ``range(n)`` of the summed block costs.

    ``cost(mask)`` may return ``None`` for forbidden blocks. Returns the value
    and the block masks.
    """
    full = (1 << n) - 1
    best: dict[int, tuple[Fraction, int]] = {0: (ZERO, 0)}
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        top = None
        sub = rest
        while True:
            block = sub | low
            c = cost(block)
            if c is not None:
                val = c + best[mask ^ block][0]
                if top is None or val < top[0]:
                    top = (val, block)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[mask] = top
    blocks = []
    mask = full
    while mask:
        blocks.append(best[mask][1])
        mask ^= best[mask][1]
    return best[full][0], blocks


def _members(jobs: Sequence[Job], mask: int) -> list[Job]:
    return [j for i, j in enumerate(jobs) if mask >> i & 1]


def opt_unbounded(inst: Instance, cap: Optional[int] = None) -> tuple[Fraction, Schedule]:
    """Minimum span with unbounded parallelism and a witness on machine 0."""
    _check_size(inst, "unbounded", cap)
    jobs = sorted(inst.jobs, key=lambda j: j.id)
    if not jobs:
        return ZERO, Schedule(inst, {})
    value, blocks = _best_partition(len(jobs), lambda m: _unbounded_cost(_members(jobs, m)))
    starts: dict[int, Fraction] = {}
    for mask in blocks:
        block = _members(jobs, mask)
        starts.update(_place_in(block, stretch(block)[0]))
    return value, Schedule(inst, {jid: Assignment(jid, 0, s) for jid, s in starts.items()})


def opt_agreeable_ordered(inst: Instance, cap: Optional[int] = None) -> tuple[Fraction, Schedule]:
    """Optimum over schedules that start jobs in release order.

    Such a schedule's stretches hold runs of consecutive jobs in release
    order, and placing each job at ``max(a, r)`` inside its run's stretch
    keeps the order, so a DP over consecutive runs is exact for this class.
    """
    _check_size(inst, "agreeable", cap)
    if not classify(inst).agreeable:
        raise PreconditionError("opt_agreeable_ordered needs agreeable deadlines")
    jobs = sorted(inst.jobs, key=lambda j: (j.release, j.deadline, j.id))
    n = len(jobs)
    best: list[Optional[tuple[Fraction, int]]] = [(ZERO, 0)] + [None] * n
    for k in range(1, n + 1):
        for i in range(k):
            val = best[i][0] + _unbounded_cost(jobs[i:k])
            if best[k] is None or val < best[k][0]:
                best[k] = (val, i)
    starts: dict[int, Fraction] = {}
    k = n
    while k:
        i = best[k][1]
        run = jobs[i:k]
        starts.update(_place_in(run, stretch(run)[0]))
        k = i
    return best[n][0], Schedule(inst, {jid: Assignment(jid, 0, s) for jid, s in starts.items()})


# --------------------------------------------------------------------------- bounded


@dataclass(frozen=True)
class CandidateStartSet:
    """Per job, the sorted candidate start times inside its window."""

    starts: dict[int, tuple[Fraction, ...]]

    def __getitem__(self, job_id: int) -> tuple[Fraction, ...]:
        return self.starts[job_id]


def candidate_starts(jobs: Sequence[Job]) -> CandidateStartSet:
    """Window endpoints plus or minus any subset sum of job lengths, clipped to windows."""
    sums = {ZERO}
    for j in jobs:
        sums = {s + d for s in sums for d in (-j.processing, ZERO, j.processing)}
    anchors = {j.release for j in jobs} | {j.deadline for j in jobs}
    out = {}
    for j in jobs:
        lo, hi = j.release, j.latest_start
        cands = {a + s for a in anchors for s in sums}
        cands = {c for c in cands if lo <= c <= hi} | {lo, hi}
        out[j.id] = tuple(sorted(cands))
    return CandidateStartSet(out)


def _compulsory(job: Job) -> Optional[tuple[Fraction, Fraction]]:
    """The part of the time line ``job`` covers wherever it starts."""
    lo, hi = job.latest_start, job.release + job.processing
    return (lo, hi) if lo < hi else None


def _insert(ivs: tuple, lo: int, hi: int) -> tuple[tuple, int]:
    """Union of disjoint sorted integer intervals with ``[lo, hi)``; also its measure."""
    out, added = [], False
    for a, b in ivs:
        if b < lo:
            out.append((a, b))
        elif a > hi:
            if not added:
                out.append((lo, hi))
                added = True
            out.append((a, b))
        else:
            lo, hi = min(a, lo), max(b, hi)
    if not added:
        out.append((lo, hi))
    return tuple(out), sum(b - a for a, b in out)


def _machine_search(jobs: list[Job], g: int, cands: CandidateStartSet, bound: Fraction):
    """Cheapest span for ``jobs`` on one machine with at most ``g`` concurrent.

    Depth-first over candidate starts with branch-and-bound. A node is cut
    when its chosen intervals plus the compulsory parts of the unplaced jobs
    already reach the incumbent. Times are scaled to integers for speed.
    Returns ``(cost, starts)`` or ``None`` when nothing beats ``bound``.
    """
    order = sorted(jobs, key=lambda j: (len(cands[j.id]), j.id))
    scale = 1
    for j in order:
        for x in (j.processing, *cands[j.id]):
            scale = math.lcm(scale, x.denominator)
    floor = max(_unbounded_cost(jobs), load(jobs) / g) * scale
    lengths = [int(j.processing * scale) for j in order]
    options_of = [[int(s * scale) for s in cands[j.id]] for j in order]
    tails: list[tuple] = [()] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        part = _compulsory(order[k])
        tails[k] = tails[k + 1] + ((int(part[0] * scale), int(part[1] * scale)),) if part else tails[k + 1]
    limit = bound * scale
    best: list = [limit, None]
    chosen: list[tuple[int, int]] = []
    picks: list[int] = []

    def conc_ok(lo, hi):
        ivs = [(a, b) for a, b in chosen if a < hi and b > lo]
        if len(ivs) < g:
            return True
        points = {lo} | {a for a, _ in ivs if a > lo}
        return all(sum(1 for a, b in ivs if a <= x < b) < g for x in points)

    def dfs(k, busy, measure):
        if best[1] is not None and best[0] <= floor:
            return  # incumbent meets the lower bound
        lb, lbm = busy, measure
        for lo, hi in tails[k]:
            lb, lbm = _insert(lb, lo, hi)
        if lbm >= best[0]:
            return
        if k == len(order):
            best[0], best[1] = measure, list(picks)
            return
        p = lengths[k]
        options = []
        for s in options_of[k]:
            if conc_ok(s, s + p):
                nxt, m = _insert(busy, s, s + p)
                options.append((m, s, nxt))
        options.sort(key=lambda o: (o[0], o[1]))
        for m, s, nxt in options:
            chosen.append((s, s + p))
            picks.append(s)
            dfs(k + 1, nxt, m)
            chosen.pop()
            picks.pop()

    dfs(0, (), 0)
    if best[1] is None:
        return None
    return Fraction(best[0], scale), {j.id: Fraction(s, scale) for j, s in zip(order, best[1])}


def opt_bounded(inst: Instance, g: Parallelism | None = None, cap: Optional[int] = None):
    """Minimum total busy time with parallelism ``g`` and a witness schedule."""
    g = as_parallelism(inst.g if g is None else g)
    _check_size(inst, "bounded", cap)
    target = Instance(inst.jobs, g, inst.lookahead)
    if g == INF:
        value, witness = opt_unbounded(target, cap=inst.n)
        return value, witness
    jobs = sorted(inst.jobs, key=lambda j: j.id)
    if not jobs:
        return ZERO, Schedule(target, {})
    cands = candidate_starts(jobs)
    exact: dict[int, tuple[Fraction, dict[int, Fraction]]] = {}
    at_least: dict[int, Fraction] = {}  # searched blocks known to cost >= value

    def solve(mask, bound=None):
        """Exact block cost, or None if it cannot beat ``bound``."""
        if mask in exact:
            found = exact[mask]
            return found if bound is None or found[0] < bound else None
        members = _members(jobs, mask)
        if len(members) <= g:
            exact[mask] = (_unbounded_cost(members), _place_in(members, stretch(members)[0]))
            return solve(mask, bound)
        if bound is not None and at_least.get(mask, ZERO) >= bound:
            return None
        # one job per machine is always feasible, so this bound admits a result
        limit = load(members) + 1 if bound is None else bound
        found = _machine_search(members, int(g), cands, limit)
        if found is None:
            at_least[mask] = max(at_least.get(mask, ZERO), limit)
            return None
        exact[mask] = found
        return found

    def lower(mask):
        members = _members(jobs, mask)
        return max(_unbounded_cost(members), load(members) / g)

    value, blocks = _best_partition_bounded(len(jobs), solve, lower)
    assignments = {}
    for m, mask in enumerate(sorted(blocks, key=lambda b: (b & -b))):
        for jid, s in solve(mask)[1].items():
            assignments[jid] = Assignment(jid, m, s)
    return value, Schedule(target, assignments)


def _best_partition_bounded(n: int, solve, lower) -> tuple[Fraction, list[int]]:
    """Set-partition DP like :func:`_best_partition`, but each block search
    only has to beat the best split of the current mask found so far."""
    full = (1 << n) - 1
    best: dict[int, tuple[Fraction, int]] = {0: (ZERO, 0)}
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        subs = []
        sub = rest
        while True:
            subs.append(sub | low)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        # cheap lower bounds first, so good splits are found early
        scored = sorted(((lower(b) + best[mask ^ b][0], b) for b in subs), key=lambda x: (x[0], x[1]))
        top = None
        for lb, block in scored:
            if top is not None and lb >= top[0]:
                break
            remainder = best[mask ^ block][0]
            found = solve(block, None if top is None else top[0] - remainder)
            if found is not None and (top is None or found[0] + remainder < top[0]):
                top = (found[0] + remainder, block)
        best[mask] = top
    blocks = []
    mask = full
    while mask:
        blocks.append(best[mask][1])
        mask ^= best[mask][1]
    return best[full][0], blocks


# --------------------------------------------------------------------------- bounds


@dataclass(frozen=True)
class LowerBounds:
    load_over_g: Fraction
    max_job: Fraction

    @property
    def best(self) -> Fraction:
        return max(self.load_over_g, self.max_job)


def lower_bounds(inst: Instance, g: Parallelism | None = None) -> LowerBounds:
    g = as_parallelism(inst.g if g is None else g)
    total = load(inst.jobs)
    return LowerBounds(
        load_over_g=ZERO if g == INF else total / g,
        max_job=max((j.processing for j in inst.jobs), default=ZERO),
    )


# --------------------------------------------------------------------------- grid oracle


def _grid_step(inst: Instance, refine: int) -> Fraction:
    times = [t for j in inst.jobs for t in (j.release, j.deadline, j.processing)]
    den = reduce(math.lcm, (t.denominator for t in times), 1)
    num = reduce(math.gcd, (t.numerator * (den // t.denominator) for t in times), 0)
    return Fraction(num or 1, den) / refine


def grid_optimum(inst: Instance, g: Parallelism | None = None, refine: int = 4,
                 cap: Optional[int] = None) -> Fraction:
    """Brute-force optimum with every start on a grid of ``1/refine`` of the
    coarsest step that divides all input times. Independent of the closure
    and partition arguments above."""
    _check_size(inst, "grid", cap)
    g = as_parallelism(inst.g if g is None else g)
    if not inst.jobs:
        return ZERO
    step = _grid_step(inst, refine)
    # integer cell coordinates
    jobs = []
    for j in sorted(inst.jobs, key=lambda j: (j.latest_start - j.release, j.id)):
        lo = int(j.release / step)
        hi = int(j.latest_start / step)
        jobs.append((range(lo, hi + 1), int(j.processing / step)))
    unbounded = g == INF
    machines: list[dict[int, int]] = []  # cell -> count per machine
    best = [sum(p for _, p in jobs) + 1]

    def dfs(k, cost):
        if cost >= best[0]:
            return
        if k == len(jobs):
            best[0] = cost
            return
        window, p = jobs[k]
        targets = range(1) if unbounded else range(len(machines) + 1)
        for m in targets:
            if m == len(machines):
                machines.append({})
            cells = machines[m]
            for s in window:
                span = range(s, s + p)
                if not unbounded and any(cells.get(c, 0) >= g for c in span):
                    continue
                added = 0
                for c in span:
                    if cells.get(c, 0) == 0:
                        added += 1
                    cells[c] = cells.get(c, 0) + 1
                dfs(k + 1, cost + added)
                for c in span:
                    cells[c] -= 1
                    if cells[c] == 0:
                        del cells[c]
            if not machines[-1]:
                machines.pop()

    if unbounded:
        machines.append({})
    dfs(0, 0)
    return best[0] * step


# --------------------------------------------------------------------------- rearrangement bound


def components(sched: Schedule) -> list[list[int]]:
    """Jobs grouped by the contiguous busy stretches of the whole schedule,
    left to right (machines are merged onto one time line)."""
    jobs = sched.instance.by_id()
    items = sorted(
        (a.start, a.start + jobs[a.job_id].processing, a.job_id) for a in sched.assignments.values()
    )
    out: list[list[int]] = []
    end = None
    for lo, hi, jid in items:
        if end is None or lo > end:
            out.append([jid])
            end = hi
        else:
            out[-1].append(jid)
            end = max(end, hi)
    return out


def thm1_rearrangement_upper_bound(inst: Instance, alg_schedule: Schedule) -> Fraction:
    """Busy time of a feasible schedule built by rearranging every other
    middle component of ``alg_schedule``: its earliest job moves left onto
    its release, the rest move right to the start of the next component.

    The result upper-bounds the offline optimum. Raises
    :class:`ConstructionError` if a moved job leaves its window.
    """
    if inst.g != INF:
        raise PreconditionError("rearrangement bound is defined for unbounded parallelism")
    jobs = inst.by_id()
    comps = components(alg_schedule)
    starts = {jid: a.start for jid, a in alg_schedule.assignments.items()}
    inf = [min(starts[j] for j in c) for c in comps]
    sup = [max(starts[j] + jobs[j].processing for j in c) for c in comps]
    middle = list(range(1, len(comps) - 1))
    if middle:
        picked = [middle[i] for i in independent_half([sup[k] - inf[k] for k in middle])]
        for k in picked:
            flag = min(comps[k], key=lambda j: (starts[j], j))
            starts[flag] = jobs[flag].release
            for jid in comps[k]:
                if jid != flag:
                    starts[jid] = inf[k + 1]
    moved = Schedule(inst, {jid: Assignment(jid, 0, s) for jid, s in starts.items()})
    violations = check_feasible(moved)
    if violations:
        raise ConstructionError(f"rearranged schedule infeasible: {violations[0]}")
    return raw_busy_time(moved)
