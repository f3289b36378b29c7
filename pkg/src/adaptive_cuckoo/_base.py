"""Estimator plumbing shared by the element-backed filters."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels as K
from ._validation import InsertionError, UsageError, check_keys, check_seed
from .cuckoo_table import (
    INSERT_DUPLICATE,
    INSERT_FAILED,
    CellAddress,
    CuckooTable,
    Placement,
    TableGeometry,
    table_delete,
    table_insert,
)
from .hashing import HashConfig, as_element

_RESULT_NAMES = {K.NEGATIVE: "negative", K.TRUE_POSITIVE: "true_positive",
                 K.FALSE_POSITIVE: "false_positive"}


class QueryResult(NamedTuple):
    """Outcome of :meth:`query`.

    ``kind`` is ``"negative"``, ``"true_positive"`` or ``"false_positive"``.
    ``addr`` is the confirmed cell (true positive) or the adapted cell
    (false positive).  ``partner`` is the swap partner cell of a multi-cell
    adaptation.
    """

    kind: str
    addr: CellAddress | None = None
    partner: int | None = None
    table_reads: int = 0

    @property
    def positive(self) -> bool:
        return self.kind != "negative"


class ElementBackedFilter(BaseEstimator):
    """Filter mirroring a cuckoo hash table one cell to one cell.

    Subclasses fix the geometry shape (``_d``, ``_c``), the fingerprint mode
    and the size of the fingerprint function family.  ``fit`` stores a key set,
    ``predict`` answers membership queries with full query semantics
    (including adaptation), and ``insert``/``delete``/``query`` work one key at
    a time.
    """

    _d = 4
    _c = 1
    _mode = K.SELECTOR
    _adaptive = True

    # subclass hooks -----------------------------------------------------
    def _fingerprint_bits(self) -> int:
        raise NotImplementedError

    def _family_size(self) -> int:
        raise NotImplementedError

    def _selector_mask(self) -> int:
        return 0

    def _keep_alpha(self) -> bool:
        return True

    def _validate_params(self) -> None:
        pass

    # construction -------------------------------------------------------
    def _allocate(self):
        self._validate_params()
        self.seed_ = check_seed(self.random_state)
        ss = np.random.SeedSequence(self.seed_)
        hash_seed, rng_seed = (int(v) for v in ss.generate_state(2, dtype=np.uint64))
        self.geometry_ = TableGeometry(d=self._d, c=self._c, b=self.n_buckets)
        self.hash_config_ = HashConfig(
            master_seed=hash_seed, d=self._d, n_buckets=self.n_buckets,
            fingerprint_bits=self._fingerprint_bits(), family_size=self._family_size())
        self.table_ = CuckooTable(self.geometry_, self.hash_config_, self.max_kicks,
                                  seed=rng_seed)
        shape = self.geometry_.shape
        self.selectors_ = np.zeros(shape, dtype=np.int64)
        self.fingerprints_ = np.zeros(shape, dtype=np.uint32)
        self.filter_occupied_ = np.zeros(shape, dtype=np.bool_)
        self.stats_ = np.zeros(K.N_STATS, dtype=np.int64)
        return self

    def _args(self):
        h = self.hash_config_
        return (self.table_.elems, self.table_.occ, self.selectors_, self.fingerprints_,
                self.filter_occupied_, h.bucket_keys, self.n_buckets, h.fp_keys,
                h.fingerprint_bits, h.sliced, self._mode)

    # estimator API ------------------------------------------------------
    def fit(self, X, y=None):
        """Build an empty filter and store every key of ``X``."""
        self._allocate()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        """Store the keys of ``X`` without clearing the filter."""
        if not hasattr(self, "table_"):
            self._allocate()
        xs = check_keys(X)
        t = self.table_
        h = self.hash_config_
        done, status, unplaced = K.filter_insert_many(
            xs, t.elems, t.occ, self.selectors_, self.fingerprints_, self.filter_occupied_,
            h.bucket_keys, self.n_buckets, h.fp_keys, h.fingerprint_bits, h.sliced,
            self._mode, self._keep_alpha(), self.max_kicks, t.rng_state, t.move_elems,
            t.move_cells)
        t.size += done
        if status == INSERT_DUPLICATE:
            raise UsageError(f"element {int(xs[done])} is already stored")
        if status == INSERT_FAILED:
            raise InsertionError(
                f"insertion {done} of {len(xs)} failed at load {self.load():.4f}; "
                "the geometry is too small for this set",
                unplaced=int(unplaced))
        return self

    def predict(self, X) -> np.ndarray:
        """Query every key of ``X`` in order; True where the answer is positive.

        Confirmed false positives are adapted away as they occur, so the
        answers depend on query order, as in a live filter.
        """
        check_is_fitted(self, "table_")
        xs = check_keys(X)
        out = np.empty(len(xs), dtype=np.bool_)
        args = self._args()
        for n, x in enumerate(xs):
            code = K.query_one(x, *args, self._selector_mask(), self._adaptive,
                               self.table_.rng_state, self.stats_)[0]
            out[n] = code != K.NEGATIVE
        return out

    def contains(self, X) -> np.ndarray:
        """Exact membership from the backing table (no filter access)."""
        check_is_fitted(self, "table_")
        return np.array([self.table_.lookup(x) is not None for x in check_keys(X)],
                        dtype=np.bool_)

    # single-key operations ---------------------------------------------
    def insert(self, x) -> Placement:
        """Store one key; the filter mirrors every displacement."""
        check_is_fitted(self, "table_")
        x = as_element(x)
        t = self.table_
        h = self.hash_config_
        status, n, unplaced = table_insert(t.elems, t.occ, x, h.bucket_keys, self.n_buckets,
                                           self.max_kicks, t.rng_state, t.move_elems,
                                           t.move_cells)
        K.mirror_moves(n, t.move_elems, t.move_cells, self.selectors_, self.fingerprints_,
                       self.filter_occupied_, h.fp_keys, h.fingerprint_bits, h.sliced,
                       self._mode, self._keep_alpha())
        return t._placement(x, status, n, unplaced)

    def delete(self, x) -> CellAddress | None:
        """Remove one key from table and filter; None when it is absent."""
        check_is_fitted(self, "table_")
        x = as_element(x)
        t = self.table_
        i, beta, k = table_delete(t.elems, t.occ, x, self.hash_config_.bucket_keys,
                                  self.n_buckets)
        if i < 0:
            return None
        t.size -= 1
        self.filter_occupied_[i, beta, k] = False
        self.fingerprints_[i, beta, k] = 0
        self.selectors_[i, beta, k] = 0
        return CellAddress(i, beta, k)

    def lookup(self, x) -> CellAddress | None:
        """Filter-only lookup: the first matching cell, or None."""
        check_is_fitted(self, "table_")
        h = self.hash_config_
        i, beta, k = K.filter_lookup(as_element(x), self.selectors_, self.fingerprints_,
                                     self.filter_occupied_, h.bucket_keys, self.n_buckets,
                                     h.fp_keys, h.fingerprint_bits, h.sliced, self._mode)
        return None if i < 0 else CellAddress(i, beta, k)

    def query(self, x) -> QueryResult:
        """Filter lookup confirmed against the table, adapting on a false positive."""
        check_is_fitted(self, "table_")
        before = self.stats_[K.ST_TABLE_READS]
        code, i, beta, k, partner = K.query_one(
            as_element(x), *self._args(), self._selector_mask(), self._adaptive,
            self.table_.rng_state, self.stats_)
        addr = None if i < 0 else CellAddress(i, beta, k)
        return QueryResult(_RESULT_NAMES[code], addr, None if partner < 0 else partner,
                           int(self.stats_[K.ST_TABLE_READS] - before))

    def __contains__(self, x):
        return self.lookup(x) is not None

    def __len__(self):
        return 0 if not hasattr(self, "table_") else len(self.table_)

    # inspection ---------------------------------------------------------
    def load(self) -> float:
        check_is_fitted(self, "table_")
        return self.table_.load()

    def mirror_violations(self) -> int:
        """Cells where filter and table disagree; 0 for a healthy filter."""
        check_is_fitted(self, "table_")
        h = self.hash_config_
        return int(K.mirror_violations(self.table_.elems, self.table_.occ, self.selectors_,
                                       self.fingerprints_, self.filter_occupied_, h.fp_keys,
                                       h.fingerprint_bits, h.sliced, self._mode))

    @property
    def counters(self) -> dict[str, int]:
        check_is_fitted(self, "table_")
        s = self.stats_
        return {
            "queries": int(s[K.ST_QUERIES]),
            "true_positives": int(s[K.ST_TRUE_POSITIVES]),
            "adaptations": int(s[K.ST_ADAPTATIONS]),
            "table_reads": int(s[K.ST_TABLE_READS]),
        }

    def replay(self, keys: np.ndarray, is_member: np.ndarray, order: np.ndarray,
               stats: np.ndarray | None = None) -> np.ndarray:
        """Query ``keys[order]`` in sequence; returns the counters array."""
        check_is_fitted(self, "table_")
        if stats is None:
            stats = np.zeros(K.N_STATS, dtype=np.int64)
        K.replay(keys, is_member, order, *self._args(), self._selector_mask(),
                 self._adaptive, self.table_.rng_state, stats)
        return stats
