import csv
import dataclasses
import io

import numpy as np
import pytest

from adaptive_cuckoo.experiment import (
    CSV_FIELDS,
    ExperimentError,
    ExperimentSpec,
    model,
    parse_variant,
    run,
    sweep,
    synthetic_model_params,
)
from adaptive_cuckoo.model import table_fpr_single
from adaptive_cuckoo.workload import SyntheticSpec, TraceSpec, gen_trace

SMALL = SyntheticSpec(ratio=2, n_e=5)


def small(variant, **kw):
    base = dict(variant=variant, bits_per_cell=8, cells=1024, workload=SMALL, trials=3, seed=5)
    base.update(kw)
    return ExperimentSpec(**base)


def test_parse_variant():
    assert parse_variant("acf-single-s3") == ("acf-single", 3)
    assert parse_variant("acf-single") == ("acf-single", 1)
    assert parse_variant("acf-multi") == ("acf-multi", 0)
    with pytest.raises(ValueError):
        parse_variant("bloom")


def test_spec_validation():
    with pytest.raises(ValueError):
        small("acf-single", s=8)
    with pytest.raises(ValueError):
        small("acf-multi", cells=1020)
    with pytest.raises(ValueError):
        small("baseline-4x1", trials=0)


@pytest.mark.parametrize("variant", ["baseline-4x1", "baseline-pk-2x4", "acf-single-s2",
                                     "acf-multi"])
def test_run_counters(variant):
    r = run(small(variant))
    assert r.trials == 3 and r.status == "ok"
    assert r.negative_query_count + r.positive_query_count == 3 * round(5 * round(2 * 973))
    assert r.measured_fpr == r.fp_count / r.negative_query_count
    if variant.startswith("acf"):
        assert r.adaptation_count == r.fp_count
        assert r.model_fpr is not None
    else:
        assert r.adaptation_count == 0
    assert r.realized_load == pytest.approx(973 / 1024)


def test_run_deterministic():
    a = run(small("acf-single-s1"))
    b = run(small("acf-single-s1"))
    assert a.csv_row() == b.csv_row()
    c = run(small("acf-single-s1", seed=6))
    assert c.csv_row() != a.csv_row()


def test_min_fp_extends_trials():
    r = run(small("baseline-4x1", min_fp=10**9, max_trials=7))
    assert r.trials == 7


def test_insertion_failure_aborts():
    spec = small("baseline-4x1", workload=SyntheticSpec(target_load=0.999, ratio=1, n_e=1),
                 max_kicks=20)
    with pytest.raises(ExperimentError, match="too small"):
        run(spec)


def test_model_dispatch():
    spec = small("acf-single-s2", bits_per_cell=12)
    tp = synthetic_model_params(spec)
    assert model(spec).model_fpr == table_fpr_single(tp, 10, 2)
    m = model(small("acf-multi", model_samples=2000))
    assert m.model_fpr > 0 and m.model_stderr > 0
    assert model(small("baseline-4x1")).model_fpr == pytest.approx(4 * (973 / 1024) / 256)


def test_skewed_runs_have_no_model():
    r = run(small("acf-single", workload=SyntheticSpec(ratio=2, n_e=5, skew=1.0), trials=1))
    assert r.model_fpr is None and r.skew == 1.0


def test_sweep_row_count_and_order():
    calls = []

    def fake(spec):
        calls.append(spec)
        from adaptive_cuckoo.experiment import _report_shell
        return _report_shell(spec)

    out = io.StringIO()
    ratios = [1, 2, 3, 4, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100]
    variants = ["baseline-4x1", "acf-single-s1", "acf-single-s2", "acf-single-s3", "acf-multi"]
    reports = sweep(small("baseline-4x1"), ratios[::-1], [16, 8, 12], variants, out=out,
                    runner=fake)
    assert len(reports) == 225
    rows = list(csv.DictReader(io.StringIO(out.getvalue())))
    assert len(rows) == 225 and list(rows[0]) == list(CSV_FIELDS)
    keys = [(r["variant"], int(r["s"]), int(r["a"]), float(r["ratio"])) for r in rows]
    assert keys == sorted(keys)


def test_sweep_bytes_identical_and_failures_marked(tmp_path):
    base = small("baseline-4x1", trials=2)
    texts = []
    for _ in range(2):
        out = io.StringIO()
        sweep(base, [1, 3], [8], ["baseline-4x1", "acf-multi"], out=out)
        texts.append(out.getvalue())
    assert texts[0] == texts[1]
    out = io.StringIO()
    bad = dataclasses.replace(base, workload=TraceSpec(str(tmp_path / "nope.txt")))
    reports = sweep(bad, [1], [8], ["baseline-4x1"], out=out)
    assert reports[0].status.startswith("failed")
    assert "failed" in out.getvalue()


def test_trace_run(tmp_path):
    path = gen_trace(tmp_path / "t.txt", flows=3000, packets=30_000, zipf=1.0, seed=1)
    for variant in ("acf-single", "acf-multi", "baseline-pk-2x4"):
        r = run(ExperimentSpec(variant=variant, bits_per_cell=8,
                               workload=TraceSpec(str(path), ratio=4), trials=2, seed=3))
        assert r.negative_query_count + r.positive_query_count == 60_000
        assert r.false_negatives == 0
        assert r.model_fpr is None and r.n_e > 1
