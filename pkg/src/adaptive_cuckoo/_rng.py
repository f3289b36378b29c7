"""Per-structure splitmix64 stream usable from compiled kernels.

Each structure owns a one-word state array, so two structures never share
random state and a fixed seed replays the same kicks and swaps.
"""

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def rng_next(state):
    state[0] += _GAMMA
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def rng_below(state, n):
    """Uniform integer in ``[0, n)`` for ``n < 2**32``."""
    return np.int64(((rng_next(state) >> np.uint64(32)) * np.uint64(n)) >> np.uint64(32))


@njit(cache=True, inline="always")
def rng_uniform(state):
    return np.float64(rng_next(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


def make_state(seed: int) -> np.ndarray:
    return np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
