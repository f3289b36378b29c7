"""Adaptive cuckoo filters, baselines, false-positive-rate models and experiment drivers."""

from ._base import QueryResult
from ._validation import InsertionError, UsageError
from .acf_multi import MultiCellAdaptiveCuckooFilter
from .acf_single import AdaptiveCuckooFilter
from .baseline import BaselineCuckooFilter, PartialKeyCuckooFilter, expected_fpp
from .cuckoo_table import CellAddress, CuckooTable, Placement, TableGeometry
from .experiment import ExperimentSpec, FprReport, model, run, sweep
from .hashing import HashConfig, as_element, bucket_index, fingerprint, pk_offset
from .model import (
    CostParams,
    SingleModelParams,
    TableModelParams,
    bucket_fpr_multi,
    bucket_fpr_single,
    expected_cost,
    p_stop,
    sample_zvector,
    table_fpr_multi,
    table_fpr_single,
)
from .workload import QueryStream, SyntheticSpec, TraceSpec, gen_synthetic, gen_trace, load_trace, split_trace

__all__ = [
    "AdaptiveCuckooFilter", "BaselineCuckooFilter", "CellAddress", "CostParams", "CuckooTable",
    "ExperimentSpec", "FprReport", "HashConfig", "InsertionError", "MultiCellAdaptiveCuckooFilter",
    "PartialKeyCuckooFilter", "Placement", "QueryResult", "QueryStream", "SingleModelParams",
    "SyntheticSpec", "TableGeometry", "TableModelParams", "TraceSpec", "UsageError", "as_element",
    "bucket_fpr_multi", "bucket_fpr_single", "bucket_index", "expected_cost", "expected_fpp",
    "fingerprint", "gen_synthetic", "gen_trace", "load_trace", "model", "p_stop", "pk_offset",
    "run", "sample_zvector", "split_trace", "sweep", "table_fpr_multi", "table_fpr_single",
]
