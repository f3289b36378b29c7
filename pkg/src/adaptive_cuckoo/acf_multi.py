"""Adaptive cuckoo filter with four cells per bucket and positional fingerprints.

Two subtables, four cells per bucket.  The fingerprint function is fixed by
cell position: an element in cell ``k`` is represented by ``f_k``.  A
confirmed false positive at cell ``j`` swaps its resident with the resident
of a uniformly chosen other cell ``k`` of the same bucket (possibly empty),
in both table and filter, which changes both fingerprints.
"""

from __future__ import annotations

from sklearn.utils.validation import check_is_fitted

from . import _kernels as K
from ._base import ElementBackedFilter
from ._validation import UsageError, check_positive_int
from .hashing import as_element, bucket_of, fp_of


class MultiCellAdaptiveCuckooFilter(ElementBackedFilter):
    """Multi-cell ACF (``d=2``, ``c=4``).

    Parameters
    ----------
    n_buckets : int
        Buckets per subtable; the filter has ``8 * n_buckets`` cells.
    bits_per_cell : int
        Fingerprint bits per cell.
    max_kicks : int
        Displacements before an insertion is declared failed.
    random_state : int, Generator or None
        Seeds the hash family, evictions and swap partners.
    """

    _d = 2
    _c = 4
    _mode = K.POSITIONAL
    _adaptive = True

    def __init__(self, n_buckets=2048, bits_per_cell=12, max_kicks=500, random_state=None):
        self.n_buckets = n_buckets
        self.bits_per_cell = bits_per_cell
        self.max_kicks = max_kicks
        self.random_state = random_state

    def _validate_params(self):
        check_positive_int(self.n_buckets, "n_buckets")
        check_positive_int(self.bits_per_cell, "bits_per_cell")

    def _fingerprint_bits(self):
        return self.bits_per_cell

    def _family_size(self):
        return self._c

    def adapt(self, i: int, j: int, x_query, partner: int | None = None) -> tuple[int, int]:
        """Swap away the false positive ``x_query`` matched at cell ``j`` of subtable ``i``.

        ``partner`` forces the other cell; by default it is drawn uniformly
        from the remaining cells of the bucket.  Returns ``(j, partner)``.
        """
        check_is_fitted(self, "table_")
        x = as_element(x_query)
        h = self.hash_config_
        if not 0 <= i < self._d or not 0 <= j < self._c:
            raise UsageError("cell address out of range")
        beta = bucket_of(x, h.bucket_keys[i], self.n_buckets)
        if not self.filter_occupied_[i, beta, j]:
            raise UsageError("no stored element in that cell")
        if self.fingerprints_[i, beta, j] != fp_of(x, j, h.fp_keys, h.fingerprint_bits, h.sliced):
            raise UsageError("x_query does not match the filter cell")
        if self.table_.elems[i, beta, j] == x:
            raise UsageError("x_query is stored there; not a false positive")
        args = (self.table_.elems, self.table_.occ, self.fingerprints_, self.filter_occupied_,
                h.fp_keys, h.fingerprint_bits, h.sliced)
        if partner is None:
            k = K.adapt_positional(i, beta, j, *args, self.table_.rng_state)
        else:
            if partner == j or not 0 <= partner < self._c:
                raise UsageError("partner must be another cell of the bucket")
            K.swap_cells(i, beta, j, partner, *args)
            k = partner
        self.stats_[K.ST_ADAPTATIONS] += 1
        return j, int(k)
