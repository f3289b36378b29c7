import numpy as np
import pytest
from scipy import stats

from adaptive_cuckoo import CuckooTable, HashConfig, InsertionError, TableGeometry, UsageError
from adaptive_cuckoo.hashing import bucket_index
from conftest import random_keys


def make_table(d, c, b, seed=3, max_kicks=500):
    g = TableGeometry(d=d, c=c, b=b)
    h = HashConfig(master_seed=seed, d=d, n_buckets=b, fingerprint_bits=8)
    return CuckooTable(g, h, max_kicks=max_kicks, seed=seed)


def assert_legal(t):
    for i, beta, k in zip(*np.nonzero(t.occ)):
        assert bucket_index(int(t.elems[i, beta, k]), int(i), t.hash_config) == beta


def test_geometry():
    g = TableGeometry.from_cells(2**14, 2, 4)
    assert (g.b, g.m) == (2048, 2**14)
    with pytest.raises(ValueError):
        TableGeometry.from_cells(100, 4, 3)
    with pytest.raises(ValueError):
        TableGeometry(d=1, c=1, b=8)


def test_empty_lookup_and_load():
    t = make_table(4, 1, 64)
    assert t.lookup(12) is None
    assert t.load() == 0
    assert t.delete(12) is None


def test_first_insert_goes_to_first_table():
    t = make_table(4, 1, 64)
    p = t.insert(99)
    assert p.addr == (0, bucket_index(99, 0, t.hash_config), 0)
    assert len(p.moved) == 1 and p.moved[0].source is None
    assert t.lookup(99) == p.addr


def test_duplicate_insert_is_usage_error():
    t = make_table(2, 4, 16)
    t.insert(5)
    with pytest.raises(UsageError):
        t.insert(5)
    assert len(t) == 1


def test_insert_delete_lookup():
    t = make_table(2, 4, 16)
    t.insert(5)
    assert t.delete(5) is not None
    assert t.lookup(5) is None
    assert t.delete(5) is None
    assert len(t) == 0


@pytest.mark.parametrize("d,c", [(4, 1), (2, 4)])
def test_fill_to_95_percent(d, c):
    m = 2**17
    t = make_table(d, c, m // (d * c))
    keys = random_keys(round(0.95 * m), seed=d)
    assert t.insert_many(keys) == len(keys) == 124_518
    assert t.load() == pytest.approx(0.95, abs=1e-4)
    assert_legal(t)
    assert all(t.lookup(x) is not None for x in keys[::997])


@pytest.mark.parametrize("d,c", [(4, 1), (2, 4)])
def test_shadow_set(d, c):
    rng = np.random.default_rng(d * 10 + c)
    t = make_table(d, c, 256 // (d * c))
    pool = random_keys(400, seed=c)
    shadow = set()
    for _ in range(10_000):
        x = int(pool[rng.integers(len(pool))])
        if rng.random() < 0.55 and x not in shadow:
            if len(shadow) >= 0.85 * 256:
                continue
            t.insert(x)
            shadow.add(x)
        elif rng.random() < 0.5:
            assert (t.delete(x) is not None) == (x in shadow)
            shadow.discard(x)
        assert (t.lookup(x) is not None) == (x in shadow)
        assert len(t) == len(shadow)
    assert set(int(v) for v in t.elements()) == shadow
    assert_legal(t)


@pytest.mark.parametrize("d,c", [(4, 1), (2, 4)])
def test_move_lists_rebuild_layout(d, c):
    t = make_table(d, c, 1024 // (d * c))
    mirror_e = np.zeros_like(t.elems)
    mirror_o = np.zeros_like(t.occ)
    for x in random_keys(int(0.95 * 1024), seed=11):
        moved = t.insert(x).moved
        # each evictee leaves the cell the previous write just took over
        for prev, mv in zip(moved, moved[1:]):
            assert mv.source == prev.target
        for mv in moved:
            mirror_e[mv.target] = mv.element
            mirror_o[mv.target] = True
            assert bucket_index(mv.element, mv.target.table, t.hash_config) == mv.target.bucket
    assert np.array_equal(mirror_o, t.occ)
    assert np.array_equal(mirror_e[t.occ], t.elems[t.occ])


@pytest.mark.parametrize("d,c", [(4, 1), (2, 4)])
def test_eviction_choice_uniform(d, c):
    counts = np.zeros((d, c))
    for rep in range(8):
        t = make_table(d, c, 4096 // (d * c), seed=rep)
        for x in random_keys(int(0.95 * 4096), seed=100 + rep):
            moved = t.insert(x).moved
            if len(moved) > 1:
                first = moved[0].target
                counts[first.table, first.cell] += 1
    assert counts.sum() > 2000
    assert stats.chisquare(counts.ravel()).pvalue > 1e-4


def test_evictee_not_returned_to_its_cell():
    t = make_table(2, 4, 32)
    for x in random_keys(int(0.95 * 256), seed=5):
        moved = t.insert(x).moved
        for mv in moved[1:]:
            assert mv.source != mv.target


def test_failure_leaves_consistent_table():
    t = make_table(2, 1, 8, max_kicks=50)  # 16 cells
    keys = [int(k) for k in random_keys(40, seed=9)]
    stored = set()
    failure = None
    for x in keys:
        try:
            t.insert(x)
            stored.add(x)
        except InsertionError as exc:
            failure = (x, exc.unplaced)
            break
    assert failure is not None
    x, unplaced = failure
    expected = (stored | {x}) - {unplaced}
    assert set(int(v) for v in t.elements()) == expected
    assert len(t) == len(stored)
    assert_legal(t)
