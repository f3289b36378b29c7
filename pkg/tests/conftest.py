import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_keys(n, seed=0):
    from adaptive_cuckoo.workload import distinct_random_keys

    return distinct_random_keys(n, np.random.default_rng(seed))
