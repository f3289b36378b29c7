"""Experiment driver: build a filter, load a set, replay a query stream, report rates."""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from ._validation import InsertionError, check_positive_int
from .acf_multi import MultiCellAdaptiveCuckooFilter
from .acf_single import ALPHA_ON_MOVE, AdaptiveCuckooFilter
from .baseline import BaselineCuckooFilter, PartialKeyCuckooFilter, expected_fpp
from .cuckoo_table import DEFAULT_MAX_KICKS, TableGeometry
from .model import TableModelParams, table_fpr_multi, table_fpr_single
from .workload import SyntheticSpec, Trace, TraceSpec, gen_synthetic, load_trace, split_trace

VARIANTS = ("baseline-4x1", "baseline-pk-2x4", "acf-single", "acf-multi")
SHAPES = {"baseline-4x1": (4, 1), "baseline-pk-2x4": (2, 4), "acf-single": (4, 1),
          "acf-multi": (2, 4)}
DESK_CELLS = 2**14
DESK_MAX_QUERIES = 20_000_000
CSV_FIELDS = ("variant", "d", "c", "s", "a", "ratio", "n_e", "skew", "trials", "measured_fpr",
              "model_fpr", "fp_count", "neg_queries", "adaptations", "realized_load", "seed",
              "status")


class ExperimentError(RuntimeError):
    pass


def parse_variant(label: str, s: int | None = None) -> tuple[str, int]:
    """``"acf-single-s2"`` -> ``("acf-single", 2)``; other labels carry ``s = 0``."""
    if label.startswith("acf-single-s"):
        return "acf-single", int(label[len("acf-single-s"):])
    if label not in VARIANTS:
        raise ValueError(f"unknown variant {label!r}; expected one of {VARIANTS} "
                         "or acf-single-s<k>")
    if label == "acf-single":
        return label, 1 if s is None else s
    return label, 0


@dataclass(frozen=True)
class ExperimentSpec:
    variant: str
    bits_per_cell: int = 12
    s: int = 0
    cells: int = DESK_CELLS
    workload: SyntheticSpec | TraceSpec = field(default_factory=SyntheticSpec)
    trials: int = 10
    seed: int = 0
    alpha_on_move: str = "keep"
    model_samples: int = 100_000
    min_fp: int = 0
    max_trials: int | None = None
    max_kicks: int = DEFAULT_MAX_KICKS

    def __post_init__(self):
        variant, s = parse_variant(self.variant, self.s or None)
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "s", s)
        check_positive_int(self.trials, "trials")
        check_positive_int(self.bits_per_cell, "bits_per_cell", minimum=2)
        if self.bits_per_cell > 30:
            raise ValueError("bits_per_cell must be at most 30")
        if variant == "acf-single" and not 1 <= s < self.bits_per_cell:
            raise ValueError("acf-single needs 1 <= s < bits_per_cell")
        if self.alpha_on_move not in ALPHA_ON_MOVE:
            raise ValueError(f"alpha_on_move must be one of {ALPHA_ON_MOVE}")
        d, c = SHAPES[variant]
        if self.cells % (d * c):
            raise ValueError(f"cells must be a multiple of {d * c} for {variant}")

    @property
    def d(self) -> int:
        return SHAPES[self.variant][0]

    @property
    def c(self) -> int:
        return SHAPES[self.variant][1]

    @property
    def label(self) -> str:
        return f"acf-single-s{self.s}" if self.variant == "acf-single" else self.variant


@dataclass
class FprReport:
    variant: str
    d: int
    c: int
    s: int
    a: int
    ratio: float
    n_e: float
    skew: float | None
    seed: int
    trials: int = 0
    measured_fpr: float | None = None
    fpr_std: float | None = None
    model_fpr: float | None = None
    model_stderr: float | None = None
    fp_count: int = 0
    negative_query_count: int = 0
    positive_query_count: int = 0
    adaptation_count: int = 0
    false_negatives: int = 0
    table_reads: int = 0
    insert_failures: int = 0
    realized_load: float | None = None
    wall_time: float = 0.0
    status: str = "ok"

    def csv_row(self) -> dict[str, str]:
        return {
            "variant": self.variant, "d": str(self.d), "c": str(self.c), "s": str(self.s),
            "a": str(self.a), "ratio": _num(self.ratio), "n_e": _num(self.n_e),
            "skew": _num(self.skew), "trials": str(self.trials),
            "measured_fpr": _num(self.measured_fpr), "model_fpr": _num(self.model_fpr),
            "fp_count": str(self.fp_count), "neg_queries": str(self.negative_query_count),
            "adaptations": str(self.adaptation_count),
            "realized_load": _num(self.realized_load), "seed": str(self.seed),
            "status": self.status,
        }


def _num(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value)) if isinstance(value, float) else str(value)


def make_filter(spec: ExperimentSpec, n_buckets: int, random_state: int):
    a = spec.bits_per_cell
    if spec.variant == "baseline-4x1":
        return BaselineCuckooFilter(n_buckets, a, spec.max_kicks, random_state)
    if spec.variant == "baseline-pk-2x4":
        return PartialKeyCuckooFilter(n_buckets, a, spec.max_kicks, random_state)
    if spec.variant == "acf-single":
        return AdaptiveCuckooFilter(n_buckets, a, spec.s, spec.alpha_on_move, spec.max_kicks,
                                    random_state)
    return MultiCellAdaptiveCuckooFilter(n_buckets, a, spec.max_kicks, random_state)


def _trial_seeds(seed: int, trial: int) -> tuple[int, int]:
    ss = np.random.SeedSequence(seed, spawn_key=(trial,))
    return tuple(int(v) for v in ss.generate_state(2, dtype=np.uint64))


_TRACES: dict[tuple[str, float], Trace] = {}


def _trace(path) -> Trace:
    p = Path(path).resolve()
    key = (str(p), p.stat().st_mtime)
    if key not in _TRACES:
        _TRACES.clear()
        _TRACES[key] = load_trace(p)
    return _TRACES[key]


def _trace_geometry(spec: ExperimentSpec, trace: Trace):
    w = spec.workload
    geometry, members, stream = split_trace(trace, w.ratio, w.target_load, spec.d, spec.c)
    if spec.variant == "baseline-pk-2x4":
        # partial-key hashing needs 2*b to be a power of two
        b = 1 << max(math.ceil(math.log2(geometry.b)), 0)
        geometry = TableGeometry(d=2, c=4, b=b)
    return geometry, members, stream


def _report_shell(spec: ExperimentSpec) -> FprReport:
    w = spec.workload
    synthetic = isinstance(w, SyntheticSpec)
    return FprReport(variant=spec.variant, d=spec.d, c=spec.c, s=spec.s, a=spec.bits_per_cell,
                     ratio=w.ratio, n_e=w.n_e if synthetic else 0.0,
                     skew=w.skew if synthetic else None, seed=spec.seed)


def synthetic_model_params(spec: ExperimentSpec) -> TableModelParams:
    w = spec.workload
    b = spec.cells // (spec.d * spec.c)
    n_set = round(w.target_load * spec.cells)
    A = max(round(w.ratio * n_set), 1)
    N = max(round(w.n_e * A), 1)
    if w.max_queries is not None:
        N = min(N, w.max_queries)
    return TableModelParams(b=b, d=spec.d, load=n_set / spec.cells, A=A, N=N)


def predict_fpr(spec: ExperimentSpec, tp: TableModelParams) -> tuple[float | None, float | None]:
    """Model rate (and Monte Carlo stderr) for a uniform stream with parameters ``tp``."""
    a = spec.bits_per_cell
    if spec.variant == "acf-single":
        return table_fpr_single(tp, a - spec.s, spec.s), None
    if spec.variant == "acf-multi":
        rng = np.random.default_rng([spec.seed, 0x4D4F44])
        return table_fpr_multi(tp, a, spec.model_samples, rng)
    return expected_fpp(spec.d, spec.c, tp.load, a), None


def model(spec: ExperimentSpec) -> FprReport:
    """Analytic prediction only; no filter is built."""
    if not isinstance(spec.workload, SyntheticSpec):
        raise ValueError("the models assume a synthetic uniform stream")
    tp = synthetic_model_params(spec)
    report = _report_shell(spec)
    report.model_fpr, report.model_stderr = predict_fpr(spec, tp)
    report.realized_load = tp.load
    return report


def _one_trial(spec: ExperimentSpec, trial: int, trace: Trace | None):
    filter_seed, workload_seed = _trial_seeds(spec.seed, trial)
    if trace is None:
        w = dataclasses.replace(spec.workload, seed=workload_seed)
        geometry = TableGeometry.from_cells(spec.cells, spec.d, spec.c)
        members, stream = gen_synthetic(w, geometry)
    else:
        geometry, members, stream = _trace_geometry(spec, trace)
    n_buckets = geometry.b
    f = make_filter(spec, n_buckets, filter_seed)
    try:
        f.fit(members)
    except InsertionError as exc:
        raise ExperimentError(f"{spec.label} a={spec.bits_per_cell}: {exc}") from exc
    stats = np.zeros(K.N_STATS, dtype=np.int64)
    for chunk in stream.chunks():
        f.replay(stream.keys, stream.is_member, chunk, stats)
    return stats, f.load(), stream


def run(spec: ExperimentSpec) -> FprReport:
    """Run ``spec.trials`` trials (more while ``fp_count < min_fp``, up to ``max_trials``).

    Counters are summed over trials; ``measured_fpr`` is the pooled rate
    and ``fpr_std`` the sample standard deviation of per-trial rates.
    """
    start = time.perf_counter()
    trace = _trace(spec.workload.path) if isinstance(spec.workload, TraceSpec) else None
    report = _report_shell(spec)
    total = np.zeros(K.N_STATS, dtype=np.int64)
    rates = []
    limit = max(spec.max_trials or spec.trials, spec.trials)
    trial = 0
    while trial < spec.trials or (total[K.ST_FALSE_POSITIVES] < spec.min_fp and trial < limit):
        stats, load, stream = _one_trial(spec, trial, trace)
        total += stats
        neg = stats[K.ST_NEGATIVE_QUERIES]
        rates.append(stats[K.ST_FALSE_POSITIVES] / neg if neg else 0.0)
        trial += 1
    neg = int(total[K.ST_NEGATIVE_QUERIES])
    report.trials = trial
    report.fp_count = int(total[K.ST_FALSE_POSITIVES])
    report.negative_query_count = neg
    report.positive_query_count = int(total[K.ST_POSITIVE_QUERIES])
    report.adaptation_count = int(total[K.ST_ADAPTATIONS])
    report.false_negatives = int(total[K.ST_FALSE_NEGATIVES])
    report.table_reads = int(total[K.ST_TABLE_READS])
    report.measured_fpr = report.fp_count / neg if neg else 0.0
    report.fpr_std = float(np.std(rates, ddof=1)) if len(rates) > 1 else 0.0
    report.realized_load = load
    if trace is not None:
        n_neg_flows = stream.n_negative_keys
        report.n_e = neg / trial / n_neg_flows if n_neg_flows else 0.0
    elif spec.workload.skew == 0:
        report.model_fpr, report.model_stderr = predict_fpr(spec, synthetic_model_params(spec))
    report.wall_time = time.perf_counter() - start
    return report


def _sort_key(spec: ExperimentSpec):
    return (spec.variant, spec.s, spec.bits_per_cell, spec.workload.ratio)


def sweep(base: ExperimentSpec, ratios, bits, variants, out=None, runner=run) -> list[FprReport]:
    """Run every (variant, bits, ratio) cell; rows are written and flushed as they finish.

    A failing cell becomes a row with ``status`` set to ``failed: ...`` and
    the sweep continues.
    """
    if not ratios or not bits or not variants:
        raise ValueError("ratios, bits and variants must be nonempty")
    specs = []
    for label in variants:
        variant, s = parse_variant(label, base.s or None)
        for a in bits:
            for r in ratios:
                w = dataclasses.replace(base.workload, ratio=r)
                specs.append(dataclasses.replace(base, variant=variant, s=s, bits_per_cell=a,
                                                 workload=w))
    specs.sort(key=_sort_key)
    writer = None
    if out is not None:
        writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        out.flush()
    reports = []
    for spec in specs:
        try:
            report = runner(spec)
        except (ExperimentError, ValueError, OSError) as exc:
            report = _report_shell(spec)
            report.status = f"failed: {exc}".replace("\n", " ")
            if isinstance(exc, ExperimentError):
                report.insert_failures = 1
        reports.append(report)
        if writer is not None:
            writer.writerow(report.csv_row())
            out.flush()
    return reports


def write_csv(reports, out) -> None:
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        writer.writerow(report.csv_row())
