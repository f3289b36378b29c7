"""Analytic false-positive-rate models and the lookup cost model.

Single-cell filter
    A bucket holding one element sees ``zeta`` distinct non-member keys.
    ``Z_i``, the number of them colliding with the element under fingerprint
    function ``i``, is taken as Poisson with mean ``mu = zeta * 2**-a'``.
    The selector walks ``0 -> 1 -> ...`` on each false positive and stops at
    the first function with ``Z_i = 0``; if all ``Z_i > 0`` it cycles forever.

Multi-cell filter
    A bucket's residents are permuted by swaps.  The per-(element, position)
    collision counts form a 4x4 matrix (``ZVector``; row = element by its
    initial position, column = position); the false positive rate of a bucket
    is estimated by simulating the 24-state permutation chain, and table-level
    rates by Monte Carlo over buckets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import integrate, stats

from ._rng import make_state, rng_below, rng_uniform

DEFAULT_TAIL_EPS = 1e-9
CELLS = 4


@dataclass(frozen=True)
class SingleModelParams:
    zeta: int
    a_prime: int
    s: int
    n: int

    def __post_init__(self):
        if self.zeta < 0 or self.n < 1 or self.s < 0 or self.a_prime < 1:
            raise ValueError("need zeta >= 0, n >= 1, s >= 0, a_prime >= 1")

    @property
    def mu(self) -> float:
        return self.zeta * 2.0 ** -self.a_prime


@dataclass(frozen=True)
class TableModelParams:
    """Table-level setting: ``A`` distinct non-members queried ``N`` times in total."""

    b: int
    d: int
    load: float
    A: int
    N: int

    def __post_init__(self):
        if self.b < 1 or self.d < 1 or self.A < 0 or self.N < 1:
            raise ValueError("need b, d, N >= 1 and A >= 0")
        if not 0.0 <= self.load <= 1.0:
            raise ValueError("load must lie in [0, 1]")

    @property
    def e_b(self) -> float:
        return self.A / self.b


@dataclass(frozen=True)
class CostParams:
    p1: float
    p2: float
    p3: float
    q1: float
    q2: float
    cI: float
    cD: float
    cP: float
    cF: float

    def __post_init__(self):
        if not math.isclose(self.p1 + self.p2 + self.p3, 1.0, abs_tol=1e-9):
            raise ValueError("operation mix p1 + p2 + p3 must equal 1")
        for name in ("p1", "p2", "p3", "q1", "q2"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("cI", "cD", "cP", "cF"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def expected_cost(cp: CostParams) -> float:
    """Mean cost per operation for a lookup/insert/delete mix behind a filter."""
    lookups = (cp.q1 + (1 - cp.q1) * cp.q2) * cp.cP + (1 - cp.q1) * (1 - cp.q2) * cp.cF
    return cp.p1 * lookups + cp.p2 * cp.cI + cp.p3 * cp.cD


# --- single-cell model --------------------------------------------------------

def p_stop(mu: float, k: int, s: int) -> float:
    """Probability the selector settles after exactly ``k`` false positives."""
    if not 0 <= k < 2**s:
        raise ValueError(f"k must lie in [0, {2**s})")
    return (-math.expm1(-mu)) ** k * math.exp(-mu)


def poisson_cutoff(mu: float, tail_eps: float) -> int:
    """Smallest ``z`` with ``P[Pois(mu) > z] < tail_eps``."""
    z = max(int(mu), 0)
    while stats.poisson.sf(z, mu) >= tail_eps:
        z += 1
    return z


def _settle_term(mu: float, s: int) -> float:
    # expected false positives before settling, summed over the stopping states
    return sum(p_stop(mu, i, s) * i for i in range(1, 2**s))


def _cycling_mass(mu: float, s: int, tail_eps: float) -> float:
    """``E[1{all Z_i > 0}] / sum_i(1/Z_i)``, via ``1/h = int exp(-t h) dt``.

    The expectation over independent ``Z_i`` factorises under the integral,
    turning the ``2**s``-fold Poisson sum into one quadrature.
    """
    if mu <= 0:
        return 0.0
    zmax = max(poisson_cutoff(mu, tail_eps), 1)
    z = np.arange(1, zmax + 1, dtype=float)
    w = stats.poisson.pmf(z, mu)
    inv = 1.0 / z
    K = 2**s

    def integrand(t):
        return float(np.dot(w, np.exp(-t * inv))) ** K

    total, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=0.0, epsrel=1e-10, limit=400)
    return total


def bucket_fpr_single(p: SingleModelParams, tail_eps: float = DEFAULT_TAIL_EPS) -> float:
    """Asymptotic false positive rate of one occupied single-cell bucket over ``n`` queries."""
    if p.zeta == 0:
        return 0.0
    mu = p.mu
    settle = _settle_term(mu, p.s) / p.n
    cycling = 2**p.s / p.zeta * _cycling_mass(mu, p.s, tail_eps)
    return min(max(settle + cycling, 0.0), 1.0)


def table_fpr_single(tp: TableModelParams, a_prime: int, s: int,
                     tail_eps: float = DEFAULT_TAIL_EPS) -> float:
    """Expected false positive rate over all buckets of a single-cell filter.

    Buckets receive ``zeta ~ Pois(A/b)`` distinct non-members and
    ``j ~ Pois(zeta N / A)`` queries.  The sum over ``j`` is done in closed
    form: settling contributes ``P[j > 0]`` times the expected number of
    false positives before settling, cycling contributes at rate ``F`` per
    query.
    """
    if tp.A == 0 or tp.load == 0:
        return 0.0
    e_b = tp.e_b
    zmax = max(poisson_cutoff(e_b, tail_eps), 1)
    total = 0.0
    for zeta in range(1, zmax + 1):
        weight = stats.poisson.pmf(zeta, e_b)
        if weight == 0.0:
            continue
        mu = zeta * 2.0 ** -a_prime
        lam = zeta * tp.N / tp.A
        settle = -math.expm1(-lam) * _settle_term(mu, s) / tp.N
        cycling = 2**s / tp.A * _cycling_mass(mu, s, tail_eps)
        total += weight * (settle + cycling)
    return min(max(tp.b * tp.d * tp.load * total, 0.0), 1.0)


# --- multi-cell model ---------------------------------------------------------

def sample_zvector(zeta: int, a: int, occupancy_count: int, rng: np.random.Generator) -> np.ndarray:
    """Collision counts ``z[element, position]`` for a bucket with ``occupancy_count`` residents.

    Residents occupy the first ``occupancy_count`` rows; the remaining rows
    are empty cells and stay zero.
    """
    if not 0 <= occupancy_count <= CELLS:
        raise ValueError(f"occupancy_count must lie in [0, {CELLS}]")
    z = np.zeros((CELLS, CELLS), dtype=np.int64)
    if occupancy_count:
        z[:occupancy_count] = rng.poisson(zeta * 2.0 ** -a, size=(occupancy_count, CELLS))
    return z


@njit(cache=True)
def chain_false_positives(z, zeta, n, rs):
    """False positives in ``n`` queries of the permutation chain started at the identity.

    Waiting times between false positives are drawn geometrically, so the
    cost is proportional to the number of false positives, not to ``n``.
    """
    c = z.shape[0]
    perm = np.arange(c)
    t = 0
    count = 0
    while True:
        hit = 0
        for p in range(c):
            hit += z[perm[p], p]
        if hit == 0:
            return count
        prob = min(hit / zeta, 1.0)
        if prob < 1.0:
            u = 1.0 - rng_uniform(rs)
            t += 1 + np.int64(math.floor(math.log(u) / math.log1p(-prob)))
        else:
            t += 1
        if t > n:
            return count
        count += 1
        r = rng_below(rs, hit)
        p = 0
        acc = z[perm[0], 0]
        while acc <= r:
            p += 1
            acc += z[perm[p], p]
        q = rng_below(rs, c - 1)
        if q >= p:
            q += 1
        tmp = perm[p]
        perm[p] = perm[q]
        perm[q] = tmp


@njit(cache=True)
def _chain_counts(zs, zetas, ns, rs):
    out = np.zeros(zs.shape[0], dtype=np.int64)
    for t in range(zs.shape[0]):
        if zetas[t] > 0 and ns[t] > 0:
            out[t] = chain_false_positives(zs[t], zetas[t], ns[t], rs)
    return out


def _state_from(rng: np.random.Generator) -> np.ndarray:
    return make_state(int(rng.integers(0, 2**64, dtype=np.uint64)))


def bucket_fpr_multi(zv: np.ndarray, zeta: int, n: int, rng: np.random.Generator,
                     reps: int = 1000) -> float:
    """False positive rate of one bucket: chain false positives over ``n`` queries, averaged."""
    zv = np.asarray(zv, dtype=np.int64)
    if zv.shape != (CELLS, CELLS) or (zv < 0).any():
        raise ValueError("zv must be a non-negative 4x4 count matrix")
    if zeta < 1 or n < 1 or reps < 1:
        raise ValueError("need zeta, n, reps >= 1")
    if not zv.any():
        return 0.0
    rs = _state_from(rng)
    zs = np.broadcast_to(zv, (reps, CELLS, CELLS)).copy()
    counts = _chain_counts(zs, np.full(reps, zeta, dtype=np.int64),
                           np.full(reps, n, dtype=np.int64), rs)
    return float(counts.mean()) / n


def table_fpr_multi(tp: TableModelParams, a: int, samples: int,
                    rng: np.random.Generator) -> tuple[float, float]:
    """Monte Carlo table-level rate of the multi-cell filter; returns ``(rate, stderr)``.

    Each sample is one bucket: ``zeta ~ Pois(A/b)``, residents
    ``~ Bin(4, load)``, collision counts from :func:`sample_zvector`, and
    ``j ~ Pois(zeta N / A)`` queries run through the permutation chain.
    The rate is ``b * d`` times the mean share of all ``N`` queries that
    were false positives in the sampled bucket.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if tp.A == 0 or tp.load == 0:
        return 0.0, 0.0
    zetas = rng.poisson(tp.e_b, size=samples).astype(np.int64)
    occ = rng.binomial(CELLS, tp.load, size=samples)
    zs = rng.poisson((zetas * 2.0 ** -a)[:, None, None], size=(samples, CELLS, CELLS))
    zs[np.arange(CELLS)[None, :] >= occ[:, None]] = 0
    js = rng.poisson(zetas * (tp.N / tp.A)).astype(np.int64)
    counts = _chain_counts(zs.astype(np.int64), zetas, js, _state_from(rng))
    share = counts / tp.N
    scale = tp.b * tp.d
    mean = scale * float(share.mean())
    err = scale * float(share.std(ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
    return min(mean, 1.0), err
