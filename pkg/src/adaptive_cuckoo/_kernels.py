"""Compiled kernels shared by the element-backed filters.

A filter mirrors the table cell for cell.  Each filter cell keeps an
occupancy flag, a selector value and a fingerprint.  Two modes decide which
fingerprint function a cell uses:

* ``SELECTOR``: the cell's own selector value (single-cell variant and the
  fixed-fingerprint baseline, where the selector stays 0);
* ``POSITIONAL``: the cell's position inside its bucket (multi-cell variant).
"""

import numpy as np
from numba import njit

from ._rng import rng_below
from .cuckoo_table import INSERT_OK, table_insert
from .hashing import bucket_of, fp_from_digest, fp_of, keyed_hash

SELECTOR = 0
POSITIONAL = 1

NEGATIVE = 0
TRUE_POSITIVE = 1
FALSE_POSITIVE = 2

# layout of the counters array
ST_QUERIES = 0
ST_NEGATIVE_QUERIES = 1
ST_POSITIVE_QUERIES = 2
ST_FALSE_POSITIVES = 3
ST_TRUE_POSITIVES = 4
ST_ADAPTATIONS = 5
ST_TABLE_READS = 6
ST_FALSE_NEGATIVES = 7
N_STATS = 8


@njit(cache=True)
def mirror_moves(n, move_elems, move_cells, falpha, ffp, focc, fkeys, fbits, sliced,
                 mode, keep_alpha):
    # forward replay; an evictee's selector is read before its cell is overwritten
    carry = 0
    for t in range(n):
        e = move_elems[t]
        i = move_cells[t, 3]
        beta = move_cells[t, 4]
        k = move_cells[t, 5]
        victim_alpha = falpha[i, beta, k]
        if mode == SELECTOR:
            a = carry if (t > 0 and keep_alpha) else 0
            falpha[i, beta, k] = a
            ffp[i, beta, k] = fp_of(e, a, fkeys, fbits, sliced)
        else:
            falpha[i, beta, k] = 0
            ffp[i, beta, k] = fp_of(e, k, fkeys, fbits, sliced)
        focc[i, beta, k] = True
        carry = victim_alpha


@njit(cache=True)
def filter_insert_many(xs, elems, occ, falpha, ffp, focc, bkeys, nb, fkeys, fbits, sliced,
                       mode, keep_alpha, max_kicks, rs, move_elems, move_cells):
    for t in range(xs.shape[0]):
        status, n, unplaced = table_insert(elems, occ, xs[t], bkeys, nb, max_kicks, rs,
                                           move_elems, move_cells)
        mirror_moves(n, move_elems, move_cells, falpha, ffp, focc, fkeys, fbits, sliced,
                     mode, keep_alpha)
        if status != INSERT_OK:
            return t, status, unplaced
    return xs.shape[0], INSERT_OK, np.uint64(0)


@njit(cache=True)
def filter_lookup(x, falpha, ffp, focc, bkeys, nb, fkeys, fbits, sliced, mode):
    """First filter cell whose fingerprint matches ``x``; never reads the table."""
    d = ffp.shape[0]
    c = ffp.shape[2]
    digest = keyed_hash(x, fkeys[0])
    for i in range(d):
        beta = bucket_of(x, bkeys[i], nb)
        for k in range(c):
            if focc[i, beta, k]:
                fid = falpha[i, beta, k] if mode == SELECTOR else k
                if ffp[i, beta, k] == fp_from_digest(x, digest, fid, fkeys, fbits, sliced):
                    return i, beta, k
    return -1, -1, -1


@njit(cache=True)
def adapt_selector(i, beta, k, elems, falpha, ffp, fkeys, fbits, sliced, smask):
    y = elems[i, beta, k]
    a = (falpha[i, beta, k] + 1) & smask
    falpha[i, beta, k] = a
    ffp[i, beta, k] = fp_of(y, a, fkeys, fbits, sliced)
    return a


@njit(cache=True)
def swap_cells(i, beta, j, k, elems, occ, ffp, focc, fkeys, fbits, sliced):
    """Exchange the residents of cells ``j`` and ``k`` of one bucket, in table and filter."""
    ej = elems[i, beta, j]
    oj = occ[i, beta, j]
    elems[i, beta, j] = elems[i, beta, k]
    occ[i, beta, j] = occ[i, beta, k]
    elems[i, beta, k] = ej
    occ[i, beta, k] = oj
    for p in (j, k):
        focc[i, beta, p] = occ[i, beta, p]
        if occ[i, beta, p]:
            ffp[i, beta, p] = fp_of(elems[i, beta, p], p, fkeys, fbits, sliced)
        else:
            ffp[i, beta, p] = 0


@njit(cache=True)
def adapt_positional(i, beta, j, elems, occ, ffp, focc, fkeys, fbits, sliced, rs):
    c = ffp.shape[2]
    k = rng_below(rs, c - 1)
    if k >= j:
        k += 1
    swap_cells(i, beta, j, k, elems, occ, ffp, focc, fkeys, fbits, sliced)
    return k


@njit(cache=True)
def query_one(x, elems, occ, falpha, ffp, focc, bkeys, nb, fkeys, fbits, sliced, mode,
              smask, adapt, rs, stats):
    """Filter lookup backed by the table; adapts on a confirmed false positive.

    Every matching filter cell is checked against the table.  Only when ``x``
    turns out to be absent is the first mismatching cell adapted, so member
    queries never trigger adaptation and exactly one cell adapts per false
    positive.  Returns ``(code, table, bucket, cell, partner)``.
    """
    d = ffp.shape[0]
    c = ffp.shape[2]
    digest = keyed_hash(x, fkeys[0])
    fi = -1
    fb = -1
    fk = -1
    stats[ST_QUERIES] += 1
    for i in range(d):
        beta = bucket_of(x, bkeys[i], nb)
        for k in range(c):
            if focc[i, beta, k]:
                fid = falpha[i, beta, k] if mode == SELECTOR else k
                if ffp[i, beta, k] == fp_from_digest(x, digest, fid, fkeys, fbits, sliced):
                    stats[ST_TABLE_READS] += 1
                    if occ[i, beta, k] and elems[i, beta, k] == x:
                        stats[ST_TRUE_POSITIVES] += 1
                        return TRUE_POSITIVE, i, beta, k, -1
                    if fi < 0:
                        fi = i
                        fb = beta
                        fk = k
    if fi < 0:
        return NEGATIVE, -1, -1, -1, -1
    partner = -1
    if adapt:
        if mode == SELECTOR:
            adapt_selector(fi, fb, fk, elems, falpha, ffp, fkeys, fbits, sliced, smask)
        else:
            partner = adapt_positional(fi, fb, fk, elems, occ, ffp, focc, fkeys, fbits,
                                       sliced, rs)
        stats[ST_ADAPTATIONS] += 1
    return FALSE_POSITIVE, fi, fb, fk, partner


@njit(cache=True)
def replay(keys, is_member, order, elems, occ, falpha, ffp, focc, bkeys, nb, fkeys, fbits,
           sliced, mode, smask, adapt, rs, stats):
    """Run ``keys[order[t]]`` for every ``t`` through :func:`query_one`."""
    for t in range(order.shape[0]):
        q = order[t]
        code, i, beta, k, p = query_one(keys[q], elems, occ, falpha, ffp, focc, bkeys, nb,
                                        fkeys, fbits, sliced, mode, smask, adapt, rs, stats)
        if is_member[q]:
            stats[ST_POSITIVE_QUERIES] += 1
            if code != TRUE_POSITIVE:
                stats[ST_FALSE_NEGATIVES] += 1
        else:
            stats[ST_NEGATIVE_QUERIES] += 1
            if code == FALSE_POSITIVE:
                stats[ST_FALSE_POSITIVES] += 1


@njit(cache=True)
def mirror_violations(elems, occ, falpha, ffp, focc, fkeys, fbits, sliced, mode):
    """Number of cells breaking the table/filter correspondence (full scan)."""
    bad = 0
    d, b, c = ffp.shape
    for i in range(d):
        for beta in range(b):
            for k in range(c):
                if occ[i, beta, k] != focc[i, beta, k]:
                    bad += 1
                elif occ[i, beta, k]:
                    fid = falpha[i, beta, k] if mode == SELECTOR else k
                    if mode == POSITIONAL and falpha[i, beta, k] != 0:
                        bad += 1
                    elif ffp[i, beta, k] != fp_of(elems[i, beta, k], fid, fkeys, fbits, sliced):
                        bad += 1
    return bad
