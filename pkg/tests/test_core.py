from decimal import Decimal
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from busytime.core import (
    INF,
    Instance,
    IntervalSet,
    Job,
    Schedule,
    as_parallelism,
    as_time,
    busy_time,
    check_feasible,
    classify,
    independent_half,
    is_agreeable,
    load,
    raw_busy_time,
    span,
    union_insert,
)
from busytime.errors import FeasibilityError, InvalidInputError

# ---------------------------------------------------------------- time values


@pytest.mark.parametrize(
    "raw, expected",
    [(3, F(3)), ("3/2", F(3, 2)), ("0.25", F(1, 4)), (Decimal("1.5"), F(3, 2)), (0.1, F(1, 10)), (F(2, 3), F(2, 3))],
)
def test_as_time_is_exact(raw, expected):
    assert as_time(raw) == expected


@pytest.mark.parametrize("bad", ["abc", "1/0", float("nan"), float("inf"), None])
def test_as_time_rejects(bad):
    with pytest.raises(InvalidInputError):
        as_time(bad)


def test_parallelism_parsing():
    assert as_parallelism("inf") == INF
    assert as_parallelism(None) == INF
    assert as_parallelism("3") == 3
    with pytest.raises(InvalidInputError):
        as_parallelism(0)


def test_job_validation():
    with pytest.raises(InvalidInputError):
        Job(1, 0, 1, 2)  # window too short
    with pytest.raises(InvalidInputError):
        Job(1, 0, 1, 0)
    j = Job(1, "1/2", 3, 1)
    assert j.latest_start == 2 and not j.rigid
    assert Job(2, 0, 1, 1).rigid


def test_instance_rejects_duplicate_ids():
    with pytest.raises(InvalidInputError):
        Instance((Job(1, 0, 1, 1), Job(1, 0, 2, 1)))


# ---------------------------------------------------------------- intervals


def test_span_examples():
    assert span(IntervalSet([(0, 1), (F(1, 2), 2), (3, 4)])) == 3
    assert span(IntervalSet()) == 0
    assert span(IntervalSet([(0, 1), (1, 2)])) == 2


def test_union_insert_examples():
    base = IntervalSet([(0, 1)])
    assert union_insert(base, 1, 2).intervals == ((0, 2),)
    assert union_insert(base, 0, 1) == base
    assert union_insert(base, 5, 6).intervals == ((0, 1), (5, 6))
    with pytest.raises(InvalidInputError):
        union_insert(base, 2, 2)


def test_interval_set_queries():
    s = IntervalSet([(0, 2), (3, 5)])
    assert s.covers(F(1, 2), 2) and not s.covers(1, 4)
    assert s.contains(0) and not s.contains(2)
    assert s.lo == 0 and s.hi == 5


intervals = st.lists(
    st.tuples(st.integers(0, 40), st.integers(1, 10)).map(lambda t: (F(t[0], 4), F(t[0] + t[1], 4))),
    max_size=12,
)


@given(intervals)
def test_span_order_invariant_and_bounded(ivs):
    a = IntervalSet(ivs)
    b = IntervalSet(reversed(ivs))
    assert a == b
    assert span(a) <= sum((hi - lo for lo, hi in ivs), F(0))
    # canonical: sorted, disjoint, non-adjacent
    for (l1, h1), (l2, h2) in zip(a.intervals, a.intervals[1:]):
        assert h1 < l2


@given(intervals, st.tuples(st.integers(0, 40), st.integers(1, 10)))
def test_span_monotone_under_insert(ivs, extra):
    s = IntervalSet(ivs)
    lo, hi = F(extra[0], 4), F(extra[0] + extra[1], 4)
    t = union_insert(s, lo, hi)
    assert span(s) <= span(t) <= span(s) + (hi - lo)
    assert t.covers(lo, hi)


# ---------------------------------------------------------------- schedules


def _sched(jobs, placements, g=INF):
    inst = Instance(tuple(jobs), g)
    return Schedule.from_starts(inst, {jid: s for jid, (m, s) in placements.items()},
                                {jid: m for jid, (m, s) in placements.items()})


def test_busy_time_examples():
    a, b = Job(1, 0, 1, 1), Job(2, 0, 1, 1)
    assert busy_time(_sched([a, b], {1: (0, 0), 2: (0, 0)})) == 1
    assert busy_time(_sched([a, b], {1: (0, 0), 2: (1, 0)})) == 2
    c, d = Job(1, 0, 2, 2), Job(2, 1, 3, 2)
    assert busy_time(_sched([c, d], {1: (0, 0), 2: (0, 1)})) == 3


def test_check_feasible_examples():
    j = Job(1, 0, 1, 1)
    assert check_feasible(_sched([j], {1: (0, 0)})) == []
    assert [v.kind for v in check_feasible(_sched([Job(1, 0, 2, 1)], {1: (0, F(3, 2))}))] == ["window"]
    three = [Job(i, 0, 1, 1) for i in (1, 2, 3)]
    viol = check_feasible(_sched(three, {i: (0, 0) for i in (1, 2, 3)}, g=2))
    assert viol and viol[0].kind == "concurrency"


def test_window_violation_late_start():
    # job (0,1,1) started at 1/2 finishes at 3/2 > 1
    bad = check_feasible(_sched([Job(1, 0, 1, 1)], {1: (0, F(1, 2))}))
    assert [v.kind for v in bad] == ["window"]


def test_missing_job_reported():
    sched = Schedule(Instance((Job(1, 0, 1, 1),)), {})
    assert [v.kind for v in check_feasible(sched)] == ["missing"]


def test_end_then_start_is_not_overlap():
    jobs = [Job(1, 0, 1, 1), Job(2, 1, 2, 1), Job(3, 0, 2, 1)]
    sched = _sched(jobs, {1: (0, 0), 2: (0, 1), 3: (0, 1)}, g=2)
    assert check_feasible(sched) == []


def test_busy_time_raises_on_infeasible():
    three = [Job(i, 0, 1, 1) for i in (1, 2, 3)]
    sched = _sched(three, {i: (0, 0) for i in (1, 2, 3)}, g=2)
    with pytest.raises(FeasibilityError):
        busy_time(sched)
    assert raw_busy_time(sched) == 1


# ---------------------------------------------------------------- classification, load, halves


def test_classify_examples():
    c = classify(Instance((Job(1, 0, 1, 1), Job(2, F(1, 2), 3, 1))))
    assert c.uniform and c.agreeable
    assert not classify(Instance((Job(1, 0, 3, 1), Job(2, 1, 2, 1)))).agreeable
    assert classify(Instance((Job(1, 0, 1, 1),))).rigid


def test_equal_releases_are_agreeable():
    assert is_agreeable([Job(1, 0, 5, 1), Job(2, 0, 2, 1)])


def test_load_examples():
    assert load([Job(1, 0, 5, 1), Job(2, 0, 5, 2), Job(3, 0, 5, 3)]) == 6
    assert load([]) == 0


def test_independent_half_examples():
    assert independent_half([1, 1, 1]) == [0, 2]
    assert independent_half([5]) == [0]
    assert independent_half([1, 10, 1, 10]) == [1, 3]
    with pytest.raises(InvalidInputError):
        independent_half([])


@given(st.lists(st.fractions(min_value=0, max_value=20), min_size=1, max_size=15))
def test_independent_half_property(values):
    idx = independent_half(values)
    assert all(b - a >= 2 for a, b in zip(idx, idx[1:]))
    assert 2 * sum((values[i] for i in idx), F(0)) >= sum(values, F(0))


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 6), st.integers(1, 3), st.integers(0, 3)), min_size=1, max_size=6),
       st.integers(1, 3))
def test_load_over_g_bounds_any_feasible_schedule(raw, g):
    # every job on its own machine at its release is feasible
    jobs = [Job(i + 1, r, r + p + s, p) for i, (r, p, s) in enumerate(raw)]
    inst = Instance(tuple(jobs), g)
    sched = Schedule.from_starts(inst, {j.id: j.release for j in jobs}, {j.id: j.id for j in jobs})
    assert load(jobs) / g <= busy_time(sched)
