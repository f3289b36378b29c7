"""Event-level reference simulations, written independently of the package models."""

import numpy as np
from numba import njit


@njit(cache=True)
def single_bucket_rates(zeta, a_prime, s, n, reps, seed):
    """FP/n for ``reps`` independent buckets holding one element.

    Each of the ``zeta`` negatives gets an explicit collision bit per
    fingerprint function.  Queries pick a negative uniformly; the gap to the
    next query that collides under the current function is geometric.
    """
    np.random.seed(seed)
    K = 1 << s
    p = 2.0 ** -a_prime
    out = np.empty(reps)
    z = np.zeros(K, dtype=np.int64)
    for r in range(reps):
        for i in range(K):
            z[i] = 0
            for q in range(zeta):
                if np.random.random() < p:
                    z[i] += 1
        alpha = 0
        t = 0
        fp = 0
        while z[alpha] > 0:
            t += np.random.geometric(z[alpha] / zeta)
            if t > n:
                break
            fp += 1
            alpha = (alpha + 1) % K
        out[r] = fp / n
    return out


@njit(cache=True)
def multi_bucket_rates(zv, zeta, n, reps, seed):
    """FP/n for a four-cell bucket driven by explicit colliding negatives.

    For each (element, position) pair, ``zv[e, p]`` distinct negatives are
    drawn as the keys colliding there.  A query scans positions in order and
    stops at the first match; a match swaps that position with a uniformly
    chosen other position.
    """
    np.random.seed(seed)
    c = zv.shape[0]
    cap = 1
    for e in range(c):
        for p in range(c):
            cap += zv[e, p]
    ids = np.empty(cap, dtype=np.int64)
    coll = np.zeros((cap, c, c), dtype=np.bool_)
    perm = np.empty(c, dtype=np.int64)
    out = np.empty(reps)
    for r in range(reps):
        nu = 0
        coll[:] = False
        for e in range(c):
            for p in range(c):
                placed = 0
                while placed < zv[e, p]:
                    q = np.random.randint(0, zeta)
                    u = -1
                    for v in range(nu):
                        if ids[v] == q:
                            u = v
                    if u < 0:
                        u = nu
                        ids[nu] = q
                        nu += 1
                    elif coll[u, e, p]:
                        continue
                    coll[u, e, p] = True
                    placed += 1
        for p in range(c):
            perm[p] = p
        t = 0
        fp = 0
        while nu > 0:
            live = False
            for u in range(nu):
                for p in range(c):
                    if coll[u, perm[p], p]:
                        live = True
            if not live:
                break
            t += np.random.geometric(nu / zeta)
            if t > n:
                break
            u = np.random.randint(0, nu)
            for p in range(c):
                if coll[u, perm[p], p]:
                    k = np.random.randint(0, c - 1)
                    if k >= p:
                        k += 1
                    tmp = perm[p]
                    perm[p] = perm[k]
                    perm[k] = tmp
                    fp += 1
                    break
        out[r] = fp / n
    return out
