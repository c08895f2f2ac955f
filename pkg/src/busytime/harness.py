"""Experiment batches: build instances, simulate, cost against an oracle, report CSV."""

from __future__ import annotations

import csv
import io
import logging
import random
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field

from busytime.adversaries import SQRT2_MINUS_1, Lemma5Adversary, Thm1Adversary, gen_random
from busytime.algorithms import make_scheduler
from busytime.core import INF, Instance, as_parallelism, as_time, busy_time, fmt_parallelism, fmt_time
from busytime.engine import simulate, simulate_adaptive
from busytime.errors import BusyTimeError, SizeError
from busytime.formats import load_instance
from busytime.oracles import lower_bounds, opt_bounded, opt_unbounded, thm1_rearrangement_upper_bound

log = logging.getLogger(__name__)

CSV_HEADER = ["instance", "n", "g", "lookahead", "algo", "alg_cost", "opt_cost", "opt_kind", "ratio", "ms"]


class GeneratorSource(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    cls: Literal["uniform", "agreeable", "arbitrary", "rigid"] = Field("uniform", alias="class")
    n_min: int = 1
    n_max: int = 8
    g: Union[int, str] = "inf"
    horizon: str = "6"
    denominator: int = 2
    max_p: str = "3"
    lookahead: Optional[str] = None  # a time, or "pmax"


class AdversarySource(BaseModel):
    type: Literal["thm1", "lemma5"]
    k: int = 20
    epsilon: Optional[str] = None
    alpha: Optional[str] = None
    lookahead: str = "0"
    budget: int = 10**6


class ExperimentConfig(BaseModel):
    algorithm: str
    files: list[str] = []
    generator: Optional[GeneratorSource] = None
    adversary: Optional[AdversarySource] = None
    oracle: Literal["exact", "bounds"] = "exact"
    repetitions: int = 1
    seed: int = 0
    output: Optional[str] = None
    timings: bool = False


@dataclass(frozen=True)
class ResultRow:
    instance: str
    n: int
    g: str
    lookahead: Fraction
    algo: str
    alg_cost: Optional[Fraction]
    opt_cost: Optional[Fraction]
    opt_kind: str
    ratio: Optional[Fraction]
    ms: Optional[float] = None

    @property
    def error(self) -> Optional[str]:
        return self.opt_kind[len("error:"):].strip() if self.opt_kind.startswith("error:") else None


@dataclass
class Case:
    id: str
    instance: Optional[Instance] = None
    adversary: Optional[AdversarySource] = None


def cases(config: ExperimentConfig) -> Iterator[Case]:
    for path in config.files:
        yield Case(f"file:{Path(path).name}", instance=load_instance(path))
    if config.generator is not None:
        gen = config.generator
        rng = random.Random(config.seed)
        for i in range(config.repetitions):
            n = rng.randint(gen.n_min, gen.n_max)
            yield Case(
                f"gen-{i:05d}",
                instance=gen_random(
                    rng.randrange(2**31), n, gen.cls, as_parallelism(gen.g), as_time(gen.horizon),
                    denominator=gen.denominator, max_p=as_time(gen.max_p),
                    lookahead=gen.lookahead if gen.lookahead == "pmax" else as_time(gen.lookahead or 0),
                ),
            )
    if config.adversary is not None:
        for i in range(config.repetitions):
            yield Case(f"adv-{config.adversary.type}-{i:05d}", adversary=config.adversary)


def build_adversary(src: AdversarySource):
    if src.type == "thm1":
        return Thm1Adversary(src.k, as_time(src.epsilon) if src.epsilon else None, lookahead=as_time(src.lookahead))
    alpha = as_time(src.alpha) if src.alpha else SQRT2_MINUS_1
    return Lemma5Adversary(alpha, lookahead=as_time(src.lookahead))


def evaluate(inst: Instance, sched, mode: str = "exact", thm1: bool = False):
    """Return ``(alg_cost, opt_cost, opt_kind)`` for a simulated schedule."""
    alg = busy_time(sched)
    if mode == "exact":
        try:
            opt = opt_unbounded(inst)[0] if inst.g == INF else opt_bounded(inst)[0]
            return alg, opt, "exact"
        except SizeError:
            pass
    if thm1:
        return alg, thm1_rearrangement_upper_bound(inst, sched), "thm1-bound"
    return alg, lower_bounds(inst).best, "lower-bound"


def run_case(case: Case, config: ExperimentConfig, trace=None) -> ResultRow:
    t0 = time.perf_counter()
    inst = case.instance
    try:
        scheduler = make_scheduler(config.algorithm)
        if case.adversary is not None:
            adv = build_adversary(case.adversary)
            inst, sched = simulate_adaptive(adv, scheduler, case.adversary.budget, trace=trace)
        else:
            sched = simulate(inst, scheduler, trace=trace)
        alg, opt, kind = evaluate(inst, sched, config.oracle, thm1=case.adversary is not None
                                  and case.adversary.type == "thm1")
        ratio = alg / opt if opt else None
    except BusyTimeError as exc:
        log.warning("case %s failed: %s", case.id, exc)
        alg = opt = ratio = None
        kind = f"error: {type(exc).__name__}: {exc}"
    ms = (time.perf_counter() - t0) * 1000 if config.timings else None
    return ResultRow(
        case.id,
        inst.n if inst is not None else 0,
        str(fmt_parallelism(inst.g)) if inst is not None else "",
        inst.lookahead if inst is not None else Fraction(0),
        config.algorithm,
        alg,
        opt,
        kind,
        ratio,
        ms,
    )


def run(config: ExperimentConfig, trace=None) -> list[ResultRow]:
    """Run every case of ``config``; failures become error rows."""
    rows = [run_case(case, config, trace) for case in cases(config)]
    rows.sort(key=lambda r: r.instance)
    if config.output:
        report_csv(rows, config.output)
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        return fmt_time(x)
    if isinstance(x, float):
        return f"{x:.3f}"
    return str(x)


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def report_csv(rows: list[ResultRow], path) -> Path:
    path = Path(path)
    path.write_text(rows_to_csv(rows))
    return path


def parse_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")

    def frac(s):
        return Fraction(s) if s else None

    return [
        ResultRow(
            rec["instance"],
            int(rec["n"]),
            rec["g"],
            Fraction(rec["lookahead"]),
            rec["algo"],
            frac(rec["alg_cost"]),
            frac(rec["opt_cost"]),
            rec["opt_kind"],
            frac(rec["ratio"]),
            float(rec["ms"]) if rec["ms"] else None,
        )
        for rec in reader
    ]


def read_csv(path) -> list[ResultRow]:
    return parse_csv(Path(path).read_text())
