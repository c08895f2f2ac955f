"""HTTP service over the core package.

Every endpoint is backed by a plain ``handle_*`` function taking and
returning pydantic models, so the CLI can call them in-process or over HTTP
with identical results.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Literal, Optional, Union

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from busytime import harness
from busytime.adversaries import gen_random
from busytime.algorithms import make_scheduler
from busytime.core import INF, Instance, as_parallelism, as_time, busy_time, check_feasible, fmt_time, raw_busy_time
from busytime.engine import simulate, simulate_adaptive
from busytime.errors import BusyTimeError
from busytime.formats import TraceWriter, instance_from_dict, instance_to_dict, schedule_from_dict, schedule_to_dict
from busytime.oracles import grid_optimum, lower_bounds, opt_agreeable_ordered, opt_bounded, opt_unbounded

Num = Union[int, str]


class JobModel(BaseModel):
    id: int
    r: Num
    d: Num
    p: Num


class InstanceModel(BaseModel):
    g: Num = "inf"
    lookahead: Num = 0
    jobs: list[JobModel] = []


class AssignmentModel(BaseModel):
    id: int
    machine: int
    s: Num


class ScheduleModel(BaseModel):
    assignments: list[AssignmentModel]
    busy_time: Optional[str] = None


def _inst(model: InstanceModel):
    return instance_from_dict(model.model_dump())


def _frac(x: Optional[Fraction]) -> Optional[str]:
    return None if x is None else fmt_time(x)


# ---------------------------------------------------------------- simulate


class SimulateRequest(BaseModel):
    instance: InstanceModel
    algo: str
    trace: bool = False


class SimulateResponse(BaseModel):
    schedule: ScheduleModel
    trace: Optional[list[dict[str, Any]]] = None


def handle_simulate(req: SimulateRequest) -> SimulateResponse:
    inst = _inst(req.instance)
    sink = TraceWriter() if req.trace else None
    sched = simulate(inst, make_scheduler(req.algo), trace=sink)
    return SimulateResponse(schedule=schedule_to_dict(sched), trace=sink.records if sink else None)


# ---------------------------------------------------------------- run


class RunResponse(BaseModel):
    csv: str
    rows: int
    errors: int


def handle_run(config: harness.ExperimentConfig) -> RunResponse:
    rows = harness.run(config.model_copy(update={"output": None}))
    return RunResponse(csv=harness.rows_to_csv(rows), rows=len(rows), errors=sum(r.error is not None for r in rows))


# ---------------------------------------------------------------- oracle


class OracleRequest(BaseModel):
    instance: InstanceModel
    g: Optional[Num] = None
    cap: Optional[int] = None
    kind: Literal["auto", "unbounded", "bounded", "agreeable", "grid"] = "auto"


class OracleResponse(BaseModel):
    value: str
    kind: str
    lower_bound: str
    witness: Optional[ScheduleModel] = None


def handle_oracle(req: OracleRequest) -> OracleResponse:
    inst = _inst(req.instance)
    g = inst.g if req.g is None else as_parallelism(req.g)
    inst = Instance(inst.jobs, g, inst.lookahead)
    kind = req.kind
    if kind == "auto":
        kind = "unbounded" if g == INF else "bounded"
    if kind == "unbounded":
        value, witness = opt_unbounded(inst, cap=req.cap)
    elif kind == "agreeable":
        value, witness = opt_agreeable_ordered(inst, cap=req.cap)
    elif kind == "bounded":
        value, witness = opt_bounded(inst, cap=req.cap)
    else:
        value, witness = grid_optimum(inst, cap=req.cap), None
    return OracleResponse(
        value=fmt_time(value),
        kind=kind,
        lower_bound=fmt_time(lower_bounds(inst).best),
        witness=schedule_to_dict(witness, value) if witness is not None else None,
    )


# ---------------------------------------------------------------- adversary


class AdversaryRequest(BaseModel):
    type: Literal["thm1", "lemma5"]
    algo: str
    k: int = 20
    epsilon: Optional[str] = None
    alpha: Optional[str] = None
    lookahead: str = "0"
    oracle: Literal["exact", "bounds"] = "exact"
    trace: bool = False


class AdversaryResponse(BaseModel):
    instance: InstanceModel
    schedule: ScheduleModel
    alg_cost: str
    opt_cost: str
    opt_kind: str
    ratio: Optional[str]
    trace: Optional[list[dict[str, Any]]] = None


def handle_adversary(req: AdversaryRequest) -> AdversaryResponse:
    src = harness.AdversarySource(type=req.type, k=req.k, epsilon=req.epsilon, alpha=req.alpha,
                                  lookahead=req.lookahead)
    sink = TraceWriter() if req.trace else None
    inst, sched = simulate_adaptive(harness.build_adversary(src), make_scheduler(req.algo), src.budget, trace=sink)
    alg, opt, kind = harness.evaluate(inst, sched, req.oracle, thm1=req.type == "thm1")
    return AdversaryResponse(
        instance=instance_to_dict(inst),
        schedule=schedule_to_dict(sched, alg),
        alg_cost=fmt_time(alg),
        opt_cost=fmt_time(opt),
        opt_kind=kind,
        ratio=_frac(alg / opt if opt else None),
        trace=sink.records if sink else None,
    )


# ---------------------------------------------------------------- gen


class GenRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    seed: int = 0
    n: int = 5
    cls: Literal["uniform", "agreeable", "arbitrary", "rigid"] = Field("arbitrary", alias="class")
    g: Num = "inf"
    horizon: Num = 8
    denominator: int = 1
    max_p: Num = 3
    lookahead: Optional[str] = None


def handle_gen(req: GenRequest) -> InstanceModel:
    la = req.lookahead if req.lookahead == "pmax" else as_time(req.lookahead or 0)
    inst = gen_random(req.seed, req.n, req.cls, as_parallelism(req.g), as_time(req.horizon),
                      denominator=req.denominator, max_p=as_time(req.max_p), lookahead=la)
    return InstanceModel.model_validate(instance_to_dict(inst))


# ---------------------------------------------------------------- validate


class ValidateRequest(BaseModel):
    instance: InstanceModel
    schedule: ScheduleModel


class ValidateResponse(BaseModel):
    feasible: bool
    violations: list[str]
    busy_time: Optional[str]
    claimed_busy_time_ok: Optional[bool] = None


def handle_validate(req: ValidateRequest) -> ValidateResponse:
    inst = _inst(req.instance)
    sched = schedule_from_dict(req.schedule.model_dump(), inst)
    violations = check_feasible(sched)
    cost = raw_busy_time(sched) if not violations else None
    claimed = None
    if cost is not None and req.schedule.busy_time is not None:
        claimed = as_time(req.schedule.busy_time) == busy_time(sched)
    return ValidateResponse(
        feasible=not violations,
        violations=[str(v) for v in violations],
        busy_time=_frac(cost),
        claimed_busy_time_ok=claimed,
    )


# ---------------------------------------------------------------- app

app = FastAPI(title="busytime", version="0.1.0")


@app.exception_handler(BusyTimeError)
async def _busytime_error(request: Request, exc: BusyTimeError):
    return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/simulate", response_model=SimulateResponse)
def simulate_endpoint(req: SimulateRequest):
    return handle_simulate(req)


@app.post("/run", response_model=RunResponse)
def run_endpoint(config: harness.ExperimentConfig):
    return handle_run(config)


@app.post("/oracle", response_model=OracleResponse)
def oracle_endpoint(req: OracleRequest):
    return handle_oracle(req)


@app.post("/adversary", response_model=AdversaryResponse)
def adversary_endpoint(req: AdversaryRequest):
    return handle_adversary(req)


@app.post("/gen", response_model=InstanceModel)
def gen_endpoint(req: GenRequest):
    return handle_gen(req)


@app.post("/validate", response_model=ValidateResponse)
def validate_endpoint(req: ValidateRequest):
    return handle_validate(req)
