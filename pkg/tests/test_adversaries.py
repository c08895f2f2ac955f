from fractions import Fraction as F

import pytest

from busytime.adversaries import (
    CLASSES,
    SQRT2_MINUS_1,
    Lemma5Adversary,
    Thm1Adversary,
    gen_random,
    latest_decision,
    lemma5_bound,
)
from busytime.algorithms import UnboundedUniform
from busytime.core import Instance, Job, busy_time, classify
from busytime.engine import Decision, OnlineScheduler, simulate_adaptive
from busytime.errors import InvalidInputError, ParameterError
from busytime.oracles import opt_bounded


class Scripted(OnlineScheduler):
    """Starts each job at a scripted time (default: its release), one machine per job."""

    def __init__(self, script=None, shared=False):
        self.script = script or {}
        self.shared = shared

    def decide(self, t):
        out = []
        for job in list(self.pending.values()):
            s = self.script.get(job.id, job.release)
            if s == t:
                out.append(self.commit(job, s, 0 if self.shared else job.id, t))
        return out

    def wakeups(self):
        return [self.script[jid] for jid in self.pending if jid in self.script]


# ---------------------------------------------------------------- thm1


def test_thm1_first_emission():
    assert Thm1Adversary(5).initial() == [Job(1, 0, 1, 1)]


def test_thm1_releases_after_early_start():
    adv = Thm1Adversary(4)
    adv.initial()
    (job,) = adv.observe([Decision(1, F(0), 0, F(0))], F(0))
    assert (job.release, job.deadline, job.processing) == (F(1, 16), 3, 1)


def test_thm1_promotes_late_start():
    adv = Thm1Adversary(4)
    adv.initial()
    adv.observe([Decision(1, F(0), 0, F(0))], F(0))
    (job,) = adv.observe([Decision(2, F(2), 0, F(2))], F(2))
    assert adv.state.component == 2 and adv.state.flags == [1, 2]
    assert (job.release, job.deadline) == (2 + F(1, 16), 6)


def test_thm1_stops_after_k_promotions():
    inst, sched = simulate_adaptive(Thm1Adversary(3), UnboundedUniform(0))
    assert inst.jobs[0] == Job(1, 0, 1, 1)
    assert sched.complete
    assert max(j.deadline for j in inst.jobs) == 9


def test_thm1_budget_two_keeps_flag_job():
    inst, _ = simulate_adaptive(Thm1Adversary(5), UnboundedUniform(0), budget=2)
    assert Job(1, 0, 1, 1) in inst.jobs


@pytest.mark.parametrize("k, eps", [(1, None), (4, F(1, 4)), (4, 0)])
def test_thm1_parameters(k, eps):
    with pytest.raises(ParameterError):
        Thm1Adversary(k, eps)


@pytest.mark.parametrize("k", [2, 3, 5, 8])
def test_thm1_instances_uniform_and_agreeable(k):
    inst, _ = simulate_adaptive(Thm1Adversary(k), UnboundedUniform(0))
    c = classify(inst)
    assert c.uniform and c.agreeable


def test_latest_decision_tie_breaks_on_id():
    ds = [Decision(3, F(1), 0, F(1)), Decision(5, F(1), 0, F(1)), Decision(9, F(0), 0, F(0))]
    assert latest_decision(ds).job_id == 5


# ---------------------------------------------------------------- lemma5


def test_lemma5_release_branch():
    adv = Lemma5Adversary(SQRT2_MINUS_1)
    inst, sched = simulate_adaptive(adv, Scripted({2: F(1, 5)}))
    jobs = inst.by_id()
    assert (jobs[3].release, jobs[3].deadline) == (F(1, 5), F(6, 5)) and jobs[3].rigid
    assert (jobs[4].release, jobs[4].deadline) == (2, 3)
    assert adv.state.phase == "released"


@pytest.mark.parametrize("shared", [True, False])
def test_lemma5_hold_branch(shared):
    adv = Lemma5Adversary(SQRT2_MINUS_1)
    inst, sched = simulate_adaptive(adv, Scripted({2: F(1, 2)}, shared=shared))
    assert inst.n == 2 and adv.state.phase == "held"
    assert busy_time(sched) >= 1 + SQRT2_MINUS_1
    assert opt_bounded(Instance(inst.jobs, 2))[0] == 1


def test_lemma5_bound_value():
    assert lemma5_bound(SQRT2_MINUS_1) > F(141, 100)
    assert abs(float(SQRT2_MINUS_1) - (2 ** 0.5 - 1)) < 1e-6


def test_lemma5_alpha_range():
    with pytest.raises(ParameterError):
        Lemma5Adversary(F(3, 2))


# ---------------------------------------------------------------- random instances


def test_gen_single_uniform_job():
    inst = gen_random(1, 1, "uniform")
    assert inst.n == 1 and inst.jobs[0].processing == 1


@pytest.mark.parametrize("cls", CLASSES)
def test_gen_deterministic_and_classed(cls):
    a = gen_random(42, 8, cls, 2, 8, denominator=3)
    assert a == gen_random(42, 8, cls, 2, 8, denominator=3)
    c = classify(a)
    if cls == "uniform":
        assert c.uniform
    if cls == "agreeable":
        assert c.agreeable
    if cls == "rigid":
        assert c.rigid


def test_gen_lookahead_pmax():
    inst = gen_random(3, 5, "arbitrary", 2, lookahead="pmax")
    assert inst.lookahead == inst.p_max


@pytest.mark.parametrize("kwargs", [dict(n=0), dict(cls="weird"), dict(horizon=0), dict(cls="uniform", horizon=F(1, 2))])
def test_gen_errors(kwargs):
    args = dict(seed=0, n=3, cls="arbitrary") | kwargs
    with pytest.raises(InvalidInputError):
        gen_random(**args)
