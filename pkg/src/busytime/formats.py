"""JSON instance and schedule files, JSON-lines traces.

Times are written as fraction strings (``"3/2"``) and read from integers,
decimal strings or fraction strings, always exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional, Union

from busytime.core import (
    Assignment,
    Instance,
    Job,
    Schedule,
    as_parallelism,
    as_time,
    busy_time,
    fmt_parallelism,
    fmt_time,
)
from busytime.errors import InvalidInputError

PathLike = Union[str, Path]


def instance_from_dict(data: dict[str, Any]) -> Instance:
    try:
        jobs = tuple(
            Job(int(j["id"]), as_time(j["r"]), as_time(j["d"]), as_time(j["p"])) for j in data.get("jobs", [])
        )
    except KeyError as exc:
        raise InvalidInputError(f"job record missing field {exc}") from exc
    return Instance(jobs, as_parallelism(data.get("g", "inf")), as_time(data.get("lookahead", 0)))


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    return {
        "g": fmt_parallelism(inst.g),
        "lookahead": fmt_time(inst.lookahead),
        "jobs": [
            {"id": j.id, "r": fmt_time(j.release), "d": fmt_time(j.deadline), "p": fmt_time(j.processing)}
            for j in inst.jobs
        ],
    }


def schedule_to_dict(sched: Schedule, cost=None) -> dict[str, Any]:
    cost = busy_time(sched) if cost is None else cost
    return {
        "assignments": [
            {"id": a.job_id, "machine": a.machine, "s": fmt_time(a.start)}
            for _, a in sorted(sched.assignments.items())
        ],
        "busy_time": fmt_time(cost),
    }


def schedule_from_dict(data: dict[str, Any], inst: Instance) -> Schedule:
    try:
        rows = [Assignment(int(a["id"]), int(a["machine"]), as_time(a["s"])) for a in data["assignments"]]
    except KeyError as exc:
        raise InvalidInputError(f"schedule record missing field {exc}") from exc
    return Schedule(inst, {a.job_id: a for a in rows})


def load_instance(path: PathLike) -> Instance:
    return instance_from_dict(json.loads(Path(path).read_text()))


def save_instance(inst: Instance, path: PathLike) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def load_schedule(path: PathLike, inst: Instance) -> Schedule:
    return schedule_from_dict(json.loads(Path(path).read_text()), inst)


class TraceWriter:
    """Collects engine trace records; optionally streams them as JSON lines."""

    def __init__(self, path: Optional[PathLike] = None):
        self.records: list[dict] = []
        self._fh = open(path, "w") if path else None

    def __call__(self, record: dict) -> None:
        self.records.append(record)
        if self._fh:
            self._fh.write(json.dumps(record, sort_keys=True) + "\n")

    def close(self) -> None:
        if self._fh:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
