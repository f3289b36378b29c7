import numpy as np
import pytest

from adaptive_cuckoo import AdaptiveCuckooFilter, UsageError
from adaptive_cuckoo import _kernels as K
from adaptive_cuckoo.hashing import fingerprint
from conftest import random_keys


def false_positive_key(f, rng, avoid=()):
    """A non-member whose filter lookup matches, and where it matched."""
    while True:
        x = int(rng.integers(0, 2**64, dtype=np.uint64))
        if x in avoid or f.contains([x])[0]:
            continue
        addr = f.lookup(x)
        if addr is not None:
            return x, addr


@pytest.fixture
def small_filter():
    keys = random_keys(int(0.95 * 1024), seed=21)
    f = AdaptiveCuckooFilter(n_buckets=256, bits_per_cell=8, selector_bits=1, random_state=3)
    return f.fit(keys), keys


def test_params_and_validation():
    f = AdaptiveCuckooFilter(selector_bits=2)
    assert f.get_params()["selector_bits"] == 2
    with pytest.raises(ValueError):
        AdaptiveCuckooFilter(bits_per_cell=3, selector_bits=3).fit([1])
    with pytest.raises(ValueError):
        AdaptiveCuckooFilter(alpha_on_move="drop").fit([1])


def test_empty_filter_negative():
    f = AdaptiveCuckooFilter(n_buckets=64, random_state=0).fit([])
    assert not f.predict(np.arange(2000)).any()
    assert f.counters["table_reads"] == 0


def test_insert_sets_alpha_zero():
    f = AdaptiveCuckooFilter(n_buckets=64, bits_per_cell=12, selector_bits=2, random_state=0)
    f.fit([])
    addr = f.insert(1234).addr
    assert f.selectors_[addr] == 0
    assert f.fingerprints_[addr] == fingerprint(1234, 0, f.hash_config_)


def test_adapt_increments_and_rewrites(small_filter, rng):
    f, _ = small_filter
    x, addr = false_positive_key(f, rng)
    y = f.table_.element_at(addr)
    assert f.selectors_[addr] == 0
    assert f.adapt(addr.table, x) == 1
    assert f.fingerprints_[addr] == fingerprint(y, 1, f.hash_config_)
    assert f.predict([y])[0]
    assert f.mirror_violations() == 0


def test_selector_wraps():
    keys = random_keys(900, seed=5)
    f = AdaptiveCuckooFilter(n_buckets=256, bits_per_cell=6, selector_bits=2, random_state=9)
    f.fit(keys)
    addr = f.table_.lookup(keys[0])
    y = int(keys[0])
    seen = [int(f.selectors_[addr])]
    h = f.hash_config_
    for _ in range(4):
        K.adapt_selector(addr.table, addr.bucket, addr.cell, f.table_.elems, f.selectors_,
                         f.fingerprints_, h.fp_keys, h.fingerprint_bits, h.sliced, 3)
        seen.append(int(f.selectors_[addr]))
    assert seen == [0, 1, 2, 3, 0]
    assert f.fingerprints_[addr] == fingerprint(y, 0, f.hash_config_)


def test_adapt_requires_false_positive(small_filter, rng):
    f, keys = small_filter
    member = f.table_.lookup(keys[3])
    with pytest.raises(UsageError):
        f.adapt(member.table, int(keys[3]))
    while True:
        x = int(rng.integers(0, 2**64, dtype=np.uint64))
        if f.lookup(x) is None:
            break
    with pytest.raises(UsageError):
        f.adapt(0, x)
    with pytest.raises(UsageError):
        f.adapt(7, x)


def test_query_outcomes(small_filter, rng):
    f, keys = small_filter
    r = f.query(keys[10])
    assert r.kind == "true_positive" and r.table_reads == 1
    assert r.addr == f.table_.lookup(keys[10])
    while True:
        x = int(rng.integers(0, 2**64, dtype=np.uint64))
        if f.lookup(x) is None:
            break
    r = f.query(x)
    assert r.kind == "negative" and r.table_reads == 0
    x, addr = false_positive_key(f, rng)
    before = f.counters["adaptations"]
    r = f.query(x)
    assert r.kind == "false_positive" and r.addr == addr
    assert f.counters["adaptations"] == before + 1
    assert f.selectors_[addr] == 1


def test_delete_vacates_both(small_filter):
    f, keys = small_filter
    addr = f.delete(keys[0])
    assert addr is not None
    assert not f.table_.occ[addr] and not f.filter_occupied_[addr]
    assert f.delete(keys[0]) is None


@pytest.mark.parametrize("policy", ["keep", "reset"])
def test_alpha_on_move(policy):
    rng = np.random.default_rng(0)
    keys = random_keys(3000, seed=1)
    f = AdaptiveCuckooFilter(n_buckets=256, bits_per_cell=8, selector_bits=2,
                             alpha_on_move=policy, random_state=2).fit(keys[:600])
    # bump every stored selector to 1, then force evictions by filling up
    f.selectors_[f.filter_occupied_] = 1
    h = f.hash_config_
    occ = f.filter_occupied_
    f.fingerprints_[occ] = [fingerprint(int(e), 1, h) for e in f.table_.elems[occ]]
    moved = set()
    for x in keys[600:int(0.95 * 1024)]:
        for mv in f.insert(int(x)).moved[1:]:
            moved.add(mv.element)
    assert moved and f.mirror_violations() == 0
    alphas = {int(f.table_.elems[a]): int(f.selectors_[a]) for a in zip(*np.nonzero(occ))}
    expect = 1 if policy == "keep" else 0
    assert all(alphas[e] == expect for e in moved if e in set(int(k) for k in keys[:600]))


def test_false_positive_probability_after_adapt():
    # P[f_1(x) == f_1(y) | f_0(x) == f_0(y)] over about 10**6 colliding pairs
    f = AdaptiveCuckooFilter(bits_per_cell=5, selector_bits=1, random_state=0).fit([])
    h = f.hash_config_
    rng = np.random.default_rng(1)
    hits = total = 0
    while total < 10**6:
        x = rng.integers(0, 2**64, size=4 * 10**6, dtype=np.uint64)
        y = rng.integers(0, 2**64, size=4 * 10**6, dtype=np.uint64)
        same = fingerprint(x, 0, h) == fingerprint(y, 0, h)
        total += same.sum()
        hits += (fingerprint(x[same], 1, h) == fingerprint(y[same], 1, h)).sum()
    assert abs(hits / total / 2**-4 - 1) < 0.02


def test_single_colliding_negative_costs_about_one_fp():
    keys = random_keys(15565, seed=4)
    f = AdaptiveCuckooFilter(n_buckets=4096, bits_per_cell=12, selector_bits=1,
                             random_state=7).fit(keys)
    rng = np.random.default_rng(3)
    counts = []
    for _ in range(300):
        x, _ = false_positive_key(f, rng)
        counts.append(sum(f.query(x).kind == "false_positive" for _ in range(50)))
    assert 1 <= np.mean(counts) < 1.05


def test_fresh_hit_rate_matches_shorter_fingerprint():
    from adaptive_cuckoo.workload import fresh_negatives

    keys = random_keys(15565, seed=6)
    f = AdaptiveCuckooFilter(n_buckets=4096, bits_per_cell=12, selector_bits=1,
                             random_state=8).fit(keys)
    n = 10**7
    negs = fresh_negatives(n, keys, np.random.default_rng(2))
    stats = f.replay(negs, np.zeros(n, dtype=bool), np.arange(n, dtype=np.int64))
    rate = stats[K.ST_FALSE_POSITIVES] / n
    assert abs(rate / (4 * f.load() * 2**-11) - 1) < 0.15
    assert stats[K.ST_ADAPTATIONS] == stats[K.ST_FALSE_POSITIVES]
    assert f.mirror_violations() == 0
