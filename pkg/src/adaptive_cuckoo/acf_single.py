"""Adaptive cuckoo filter with one cell per bucket and hash-selector bits.

Each of the four subtables has single-cell buckets.  A filter cell stores an
``s``-bit selector ``alpha`` and an ``(a - s)``-bit fingerprint computed with
fingerprint function ``f_alpha``.  A confirmed false positive bumps
``alpha`` by one (mod ``2**s``) and rewrites the fingerprint of the stored
element with the new function.
"""

from __future__ import annotations

from sklearn.utils.validation import check_is_fitted

from . import _kernels as K
from ._base import ElementBackedFilter
from ._validation import UsageError, check_positive_int
from .hashing import as_element, bucket_of, fp_of

ALPHA_ON_MOVE = ("keep", "reset")


class AdaptiveCuckooFilter(ElementBackedFilter):
    """Single-cell ACF (``d=4``, ``c=1``).

    Parameters
    ----------
    n_buckets : int
        Buckets per subtable; the filter has ``4 * n_buckets`` cells.
    bits_per_cell : int
        Total bits per filter cell, selector included.
    selector_bits : int
        Width ``s`` of the hash selector; fingerprints keep
        ``bits_per_cell - selector_bits`` bits.
    alpha_on_move : {"keep", "reset"}
        What happens to a selector when cuckoo insertion moves its element.
    max_kicks : int
        Displacements before an insertion is declared failed.
    random_state : int, Generator or None
        Seeds the hash family and the eviction stream.
    """

    _d = 4
    _c = 1
    _mode = K.SELECTOR
    _adaptive = True

    def __init__(self, n_buckets=4096, bits_per_cell=12, selector_bits=1,
                 alpha_on_move="keep", max_kicks=500, random_state=None):
        self.n_buckets = n_buckets
        self.bits_per_cell = bits_per_cell
        self.selector_bits = selector_bits
        self.alpha_on_move = alpha_on_move
        self.max_kicks = max_kicks
        self.random_state = random_state

    def _validate_params(self):
        check_positive_int(self.n_buckets, "n_buckets")
        check_positive_int(self.selector_bits, "selector_bits")
        check_positive_int(self.bits_per_cell, "bits_per_cell", minimum=2)
        if self.selector_bits > 8:
            raise ValueError("selector_bits above 8 is not supported")
        if self.bits_per_cell - self.selector_bits < 1:
            raise ValueError("bits_per_cell must leave at least one fingerprint bit")
        if self.alpha_on_move not in ALPHA_ON_MOVE:
            raise ValueError(f"alpha_on_move must be one of {ALPHA_ON_MOVE}")

    def _fingerprint_bits(self):
        return self.bits_per_cell - self.selector_bits

    def _family_size(self):
        return 1 << self.selector_bits

    def _selector_mask(self):
        return (1 << self.selector_bits) - 1

    def _keep_alpha(self):
        return self.alpha_on_move == "keep"

    def adapt(self, i: int, x_query) -> int:
        """Remove the false positive ``x_query`` produced at subtable ``i``.

        Increments the cell's selector and rewrites its fingerprint for the
        stored element.  Returns the new selector value.
        """
        check_is_fitted(self, "table_")
        x = as_element(x_query)
        h = self.hash_config_
        if not 0 <= i < self._d:
            raise UsageError(f"table index {i} outside [0, {self._d})")
        beta = bucket_of(x, h.bucket_keys[i], self.n_buckets)
        if not self.filter_occupied_[i, beta, 0]:
            raise UsageError("no stored element in that cell")
        alpha = int(self.selectors_[i, beta, 0])
        if self.fingerprints_[i, beta, 0] != fp_of(x, alpha, h.fp_keys, h.fingerprint_bits,
                                                   h.sliced):
            raise UsageError("x_query does not match the filter cell")
        if self.table_.elems[i, beta, 0] == x:
            raise UsageError("x_query is stored there; not a false positive")
        new = K.adapt_selector(i, beta, 0, self.table_.elems, self.selectors_,
                               self.fingerprints_, h.fp_keys, h.fingerprint_bits, h.sliced,
                               self._selector_mask())
        self.stats_[K.ST_ADAPTATIONS] += 1
        return int(new)

