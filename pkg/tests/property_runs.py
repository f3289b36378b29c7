"""Glue that builds small filters and runs the numba property drivers on them."""

import numpy as np

from adaptive_cuckoo import (
    AdaptiveCuckooFilter,
    BaselineCuckooFilter,
    MultiCellAdaptiveCuckooFilter,
    PartialKeyCuckooFilter,
)
from property_driver import element_backed_ops, partial_key_ops

CELLS = 64
VARIANTS = ("baseline-4x1", "acf-single", "acf-multi", "baseline-pk-2x4")


def _pool(seed, size=160):
    rng = np.random.default_rng(seed)
    return np.unique(rng.integers(0, 2**63, size=size, dtype=np.uint64))


def run_variant(variant, seed, n_ops):
    pool = _pool(seed)
    cap = int(0.9 * CELLS)
    if variant == "baseline-pk-2x4":
        f = PartialKeyCuckooFilter(n_buckets=CELLS // 8, bits_per_cell=4, random_state=seed)
        f.fit([])
        h = f.hash_config_
        return partial_key_ops(pool, n_ops, seed, f.fingerprints_, f.occupied_, h.bucket_keys[0],
                               h.pk_key, h.n_buckets, h.fp_keys, h.fingerprint_bits, h.sliced,
                               f.max_kicks, f.rng_state_, f._path_b, f._path_k, f._path_old,
                               cap)
    if variant == "baseline-4x1":
        f = BaselineCuckooFilter(n_buckets=CELLS // 4, bits_per_cell=4, random_state=seed)
    elif variant == "acf-single":
        f = AdaptiveCuckooFilter(n_buckets=CELLS // 4, bits_per_cell=5, selector_bits=2,
                                 random_state=seed)
    else:
        f = MultiCellAdaptiveCuckooFilter(n_buckets=CELLS // 8, bits_per_cell=4,
                                          random_state=seed)
    f.fit([])
    t = f.table_
    h = f.hash_config_
    return element_backed_ops(pool, n_ops, seed, t.elems, t.occ, f.selectors_, f.fingerprints_,
                              f.filter_occupied_, h.bucket_keys, f.n_buckets, h.fp_keys,
                              h.fingerprint_bits, h.sliced, f._mode, f._selector_mask(),
                              f._adaptive, f._keep_alpha(), f.max_kicks, t.rng_state,
                              t.move_elems, t.move_cells, cap)
