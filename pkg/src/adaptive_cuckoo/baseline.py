"""Non-adaptive comparison filters and the fresh-query false positive estimate."""

from __future__ import annotations

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels as K
from ._base import ElementBackedFilter
from ._rng import make_state, rng_below
from ._validation import InsertionError, check_fraction, check_keys, check_positive_int, check_seed
from .hashing import HashConfig, as_element, bucket_of, fp_of, pk_offset_of

__all__ = ["BaselineCuckooFilter", "PartialKeyCuckooFilter", "expected_fpp"]


def expected_fpp(d: int, c: int, load: float, a: int) -> float:
    """Probability that a fresh non-member matches one of the ``d*c`` probed cells."""
    if a < 1:
        raise ValueError("a must be >= 1")
    load = check_fraction(load, "load")
    return d * c * load * 2.0 ** -a


class BaselineCuckooFilter(ElementBackedFilter):
    """Element-backed ``d=4``, ``c=1`` filter with one fixed fingerprint function.

    Placement is identical to :class:`~adaptive_cuckoo.acf_single.AdaptiveCuckooFilter`
    (the filter mirrors a cuckoo hash table), but false positives are only
    detected, never adapted.
    """

    _d = 4
    _c = 1
    _mode = K.SELECTOR
    _adaptive = False

    def __init__(self, n_buckets=4096, bits_per_cell=12, max_kicks=500, random_state=None):
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
        return 1


# --- partial-key cuckoo filter ------------------------------------------------

@njit(cache=True, inline="always")
def _pk_buckets(x, bkey, pkey, nb, fkeys, fbits, sliced):
    f = fp_of(x, 0, fkeys, fbits, sliced)
    i1 = bucket_of(x, bkey, nb)
    return f, i1, i1 ^ pk_offset_of(f, pkey, nb)


@njit(cache=True)
def pk_contains(x, fps, occ, bkey, pkey, nb, fkeys, fbits, sliced):
    f, i1, i2 = _pk_buckets(x, bkey, pkey, nb, fkeys, fbits, sliced)
    c = fps.shape[1]
    for beta in (i1, i2):
        for k in range(c):
            if occ[beta, k] and fps[beta, k] == f:
                return True
    return False


@njit(cache=True)
def pk_insert(x, fps, occ, bkey, pkey, nb, fkeys, fbits, sliced, max_kicks, rs,
              path_b, path_k, path_old):
    """Insert by partial-key cuckoo hashing; a failed insertion is rolled back."""
    f, i1, i2 = _pk_buckets(x, bkey, pkey, nb, fkeys, fbits, sliced)
    c = fps.shape[1]
    for beta in (i1, i2):
        for k in range(c):
            if not occ[beta, k]:
                fps[beta, k] = f
                occ[beta, k] = True
                return True
    beta = i1 if rng_below(rs, 2) == 0 else i2
    cur = f
    for n in range(max_kicks):
        k = rng_below(rs, c)
        old = fps[beta, k]
        fps[beta, k] = cur
        path_b[n] = beta
        path_k[n] = k
        path_old[n] = old
        cur = old
        beta = beta ^ pk_offset_of(cur, pkey, nb)
        for kk in range(c):
            if not occ[beta, kk]:
                fps[beta, kk] = cur
                occ[beta, kk] = True
                return True
    for n in range(max_kicks - 1, -1, -1):
        fps[path_b[n], path_k[n]] = path_old[n]
    return False


@njit(cache=True)
def pk_delete(x, fps, occ, bkey, pkey, nb, fkeys, fbits, sliced):
    f, i1, i2 = _pk_buckets(x, bkey, pkey, nb, fkeys, fbits, sliced)
    c = fps.shape[1]
    for beta in (i1, i2):
        for k in range(c):
            if occ[beta, k] and fps[beta, k] == f:
                occ[beta, k] = False
                fps[beta, k] = 0
                return True
    return False


@njit(cache=True)
def _pk_insert_many(xs, fps, occ, bkey, pkey, nb, fkeys, fbits, sliced, max_kicks, rs,
                    path_b, path_k, path_old):
    for t in range(xs.shape[0]):
        if not pk_insert(xs[t], fps, occ, bkey, pkey, nb, fkeys, fbits, sliced, max_kicks, rs,
                         path_b, path_k, path_old):
            return t
    return xs.shape[0]


@njit(cache=True)
def pk_replay(keys, is_member, order, fps, occ, bkey, pkey, nb, fkeys, fbits, sliced, stats):
    for t in range(order.shape[0]):
        q = order[t]
        hit = pk_contains(keys[q], fps, occ, bkey, pkey, nb, fkeys, fbits, sliced)
        stats[K.ST_QUERIES] += 1
        if is_member[q]:
            stats[K.ST_POSITIVE_QUERIES] += 1
            if hit:
                stats[K.ST_TRUE_POSITIVES] += 1
            else:
                stats[K.ST_FALSE_NEGATIVES] += 1
        else:
            stats[K.ST_NEGATIVE_QUERIES] += 1
            if hit:
                stats[K.ST_FALSE_POSITIVES] += 1


class PartialKeyCuckooFilter(BaseEstimator):
    """Classic cuckoo filter: fingerprints only, partial-key alternate buckets.

    The two candidate buckets of ``x`` are ``h(x)`` and ``h(x) XOR g(f(x))``
    inside one array of ``2 * n_buckets`` buckets with four cells each, so a
    stored fingerprint can be moved without the original element.  Deleting
    a key that was never inserted may remove another key's fingerprint.
    """

    _c = 4

    def __init__(self, n_buckets=2048, bits_per_cell=12, max_kicks=500, random_state=None):
        self.n_buckets = n_buckets
        self.bits_per_cell = bits_per_cell
        self.max_kicks = max_kicks
        self.random_state = random_state

    def _allocate(self):
        check_positive_int(self.n_buckets, "n_buckets")
        check_positive_int(self.bits_per_cell, "bits_per_cell")
        check_positive_int(self.max_kicks, "max_kicks")
        total = 2 * self.n_buckets
        if total & (total - 1):
            raise ValueError("partial-key hashing needs a power-of-two bucket count")
        self.seed_ = check_seed(self.random_state)
        ss = np.random.SeedSequence(self.seed_)
        hash_seed, rng_seed = (int(v) for v in ss.generate_state(2, dtype=np.uint64))
        self.hash_config_ = HashConfig(master_seed=hash_seed, d=1, n_buckets=total,
                                       fingerprint_bits=self.bits_per_cell, family_size=1)
        self.fingerprints_ = np.zeros((total, self._c), dtype=np.uint32)
        self.occupied_ = np.zeros((total, self._c), dtype=np.bool_)
        self.rng_state_ = make_state(rng_seed)
        self._path_b = np.zeros(self.max_kicks, dtype=np.int64)
        self._path_k = np.zeros(self.max_kicks, dtype=np.int64)
        self._path_old = np.zeros(self.max_kicks, dtype=np.uint32)
        self.size_ = 0

    def _args(self):
        h = self.hash_config_
        return (self.fingerprints_, self.occupied_, h.bucket_keys[0], h.pk_key,
                h.n_buckets, h.fp_keys, h.fingerprint_bits, h.sliced)

    def fit(self, X, y=None):
        self._allocate()
        return self.partial_fit(X)

    def partial_fit(self, X, y=None):
        if not hasattr(self, "fingerprints_"):
            self._allocate()
        xs = check_keys(X)
        done = _pk_insert_many(xs, *self._args(), self.max_kicks, self.rng_state_,
                               self._path_b, self._path_k, self._path_old)
        self.size_ += done
        if done < len(xs):
            raise InsertionError(
                f"insertion {done} of {len(xs)} failed at load {self.load():.4f}",
                unplaced=int(xs[done]))
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "fingerprints_")
        args = self._args()
        return np.array([pk_contains(x, *args) for x in check_keys(X)], dtype=np.bool_)

    def insert(self, x) -> None:
        """Add one key; on failure the filter is left exactly as before."""
        check_is_fitted(self, "fingerprints_")
        x = as_element(x)
        if not pk_insert(x, *self._args(), self.max_kicks, self.rng_state_,
                         self._path_b, self._path_k, self._path_old):
            raise InsertionError(f"no room after {self.max_kicks} displacements", unplaced=int(x))
        self.size_ += 1

    def delete(self, x) -> bool:
        check_is_fitted(self, "fingerprints_")
        removed = pk_delete(as_element(x), *self._args())
        self.size_ -= int(removed)
        return bool(removed)

    def lookup(self, x) -> bool:
        check_is_fitted(self, "fingerprints_")
        return bool(pk_contains(as_element(x), *self._args()))

    __contains__ = lookup

    def __len__(self):
        return getattr(self, "size_", 0)

    def alt_bucket(self, bucket: int, fp: int) -> int:
        """The other candidate bucket of a fingerprint sitting in ``bucket``."""
        check_is_fitted(self, "fingerprints_")
        h = self.hash_config_
        return int(bucket ^ pk_offset_of(np.uint32(fp), h.pk_key, h.n_buckets))

    def load(self) -> float:
        check_is_fitted(self, "fingerprints_")
        return self.size_ / self.fingerprints_.size

    def replay(self, keys, is_member, order, stats=None):
        check_is_fitted(self, "fingerprints_")
        if stats is None:
            stats = np.zeros(K.N_STATS, dtype=np.int64)
        pk_replay(keys, is_member, order, *self._args(), stats)
        return stats
