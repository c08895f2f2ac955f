import json
from fractions import Fraction as F

import pytest

from busytime.core import INF, Instance, Job, Schedule
from busytime.formats import (
    instance_from_dict,
    instance_to_dict,
    load_instance,
    save_instance,
    schedule_from_dict,
    schedule_to_dict,
)
from busytime.harness import CSV_HEADER, ExperimentConfig, ResultRow, parse_csv, report_csv, rows_to_csv, run


def test_instance_json_round_trip(tmp_path):
    inst = Instance((Job(1, 0, F(5, 2), 1), Job(2, "1/3", 4, "1/2")), 3, F(1, 2))
    path = tmp_path / "i.json"
    save_instance(inst, path)
    assert load_instance(path) == inst
    data = json.loads(path.read_text())
    assert data["jobs"][1]["r"] == "1/3" and data["g"] == 3


def test_instance_json_accepts_numbers_and_decimals():
    inst = instance_from_dict({"jobs": [{"id": 1, "r": 0, "d": "2.5", "p": 1}]})
    assert inst.g == INF and inst.jobs[0].deadline == F(5, 2)
    assert instance_to_dict(inst)["g"] == "inf"


def test_schedule_json_round_trip():
    inst = Instance((Job(1, 0, 3, 1), Job(2, 0, 3, 1)))
    sched = Schedule.from_starts(inst, {1: F(1, 2), 2: 2})
    data = schedule_to_dict(sched)
    assert data["busy_time"] == "2"
    assert schedule_from_dict(data, inst).assignments == sched.assignments


def test_empty_config_gives_empty_report(tmp_path):
    out = tmp_path / "r.csv"
    rows = run(ExperimentConfig(algorithm="unbounded-agreeable", output=str(out)))
    assert rows == []
    assert out.read_text().splitlines() == [",".join(CSV_HEADER)]


def test_single_row_report_and_fraction_format(tmp_path):
    row = ResultRow("x", 2, "inf", F(0), "a", F(3), F(2), "exact", F(3, 2))
    path = report_csv([row], tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and lines[1].endswith(",exact,3/2,")


def test_uniform_batch_ratio_at_most_two():
    cfg = ExperimentConfig(
        algorithm="unbounded-uniform:alpha=0",
        generator={"class": "uniform", "n_max": 8, "g": "inf"},
        repetitions=30,
        seed=7,
    )
    rows = run(cfg)
    assert len(rows) == 30
    assert all(r.opt_kind == "exact" and r.ratio <= 2 for r in rows)
    assert parse_csv(rows_to_csv(rows)) == rows


def test_precondition_mismatch_is_row_error():
    cfg = ExperimentConfig(
        algorithm="unbounded-agreeable",
        generator={"class": "arbitrary", "n_min": 4, "n_max": 6},
        repetitions=20,
        seed=1,
    )
    rows = run(cfg)
    assert len(rows) == 20
    errors = [r for r in rows if r.error]
    assert errors and all("PreconditionError" in r.opt_kind and r.ratio is None for r in errors)


def test_thm1_row_ratio():
    rows = run(ExperimentConfig(algorithm="unbounded-uniform:alpha=0", adversary={"type": "thm1", "k": 40}))
    (row,) = rows
    assert row.opt_kind == "thm1-bound" and row.ratio >= F(7, 4)


def test_bounds_mode_uses_lower_bound():
    cfg = ExperimentConfig(algorithm="uniform-bounded", generator={"class": "uniform", "g": 2}, oracle="bounds",
                           repetitions=5)
    rows = run(cfg)
    assert all(r.opt_kind == "lower-bound" and r.ratio >= 1 for r in rows)


def test_rerun_is_byte_identical(tmp_path):
    cfg = dict(algorithm="greedy-tracking",
               generator={"class": "arbitrary", "g": 3, "n_max": 6, "lookahead": "pmax"},
               repetitions=15, seed=3)
    a = report_csv(run(ExperimentConfig(**cfg)), tmp_path / "a.csv").read_bytes()
    b = report_csv(run(ExperimentConfig(**cfg)), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_file_sources(tmp_path):
    path = tmp_path / "inst.json"
    save_instance(Instance((Job(1, 0, 5, 1), Job(2, 1, 6, 1))), path)
    (row,) = run(ExperimentConfig(algorithm="unbounded-uniform:alpha=1/2", files=[str(path)]))
    assert row.instance == "file:inst.json" and row.alg_cost == 1 and row.ratio == 1


def test_timings_column_optional():
    cfg = ExperimentConfig(algorithm="uniform-bounded", generator={"class": "uniform", "g": 2}, timings=True)
    (row,) = run(cfg)
    assert row.ms is not None and row.ms >= 0


def test_parse_csv_rejects_wrong_header():
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")


def test_unwritable_output_path(tmp_path):
    with pytest.raises(OSError):
        report_csv([], tmp_path / "missing" / "r.csv")
