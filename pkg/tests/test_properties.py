import numpy as np
import pytest
from hypothesis import settings, strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, precondition, rule

from adaptive_cuckoo import (
    AdaptiveCuckooFilter,
    BaselineCuckooFilter,
    InsertionError,
    MultiCellAdaptiveCuckooFilter,
    PartialKeyCuckooFilter,
)
from property_driver import LOCALITY, OK, describe, element_backed_ops
from property_runs import VARIANTS, _pool, run_variant

keys = st.integers(0, 2**64 - 1)


class ElementBackedMachine(RuleBasedStateMachine):
    make = None

    def __init__(self):
        super().__init__()
        self.f = self.make().fit([])
        self.shadow = set()

    @precondition(lambda self: len(self.shadow) < 50)
    @rule(x=keys)
    def insert(self, x):
        if x in self.shadow:
            return
        try:
            self.f.insert(x)
            self.shadow.add(x)
        except InsertionError as exc:
            self.shadow.add(x)
            self.shadow.discard(exc.unplaced)

    @rule(data=st.data())
    def delete_member(self, data):
        if self.shadow:
            x = data.draw(st.sampled_from(sorted(self.shadow)))
            assert self.f.delete(x) is not None
            self.shadow.discard(x)

    @rule(x=keys)
    def query_any(self, x):
        r = self.f.query(x)
        assert (r.kind == "true_positive") == (x in self.shadow)
        assert r.table_reads <= self.f._d * self.f._c

    @rule(data=st.data())
    def query_member(self, data):
        if self.shadow:
            x = data.draw(st.sampled_from(sorted(self.shadow)))
            r = self.f.query(x)
            assert r.kind == "true_positive" and r.table_reads >= 1

    @invariant()
    def mirrored(self):
        assert self.f.mirror_violations() == 0
        assert len(self.f) == len(self.shadow)
        assert set(int(v) for v in self.f.table_.elements()) == self.shadow


class SingleMachine(ElementBackedMachine):
    make = staticmethod(lambda: AdaptiveCuckooFilter(n_buckets=16, bits_per_cell=4,
                                                     selector_bits=2, random_state=1))


class SingleResetMachine(ElementBackedMachine):
    make = staticmethod(lambda: AdaptiveCuckooFilter(n_buckets=16, bits_per_cell=3,
                                                     alpha_on_move="reset", random_state=2))


class MultiMachine(ElementBackedMachine):
    make = staticmethod(lambda: MultiCellAdaptiveCuckooFilter(n_buckets=8, bits_per_cell=3,
                                                              random_state=3))


class BaselineMachine(ElementBackedMachine):
    make = staticmethod(lambda: BaselineCuckooFilter(n_buckets=16, bits_per_cell=3,
                                                     random_state=4))


class PartialKeyMachine(RuleBasedStateMachine):
    def __init__(self):
        super().__init__()
        self.f = PartialKeyCuckooFilter(n_buckets=8, bits_per_cell=4, random_state=5).fit([])
        self.stored = []

    @precondition(lambda self: len(self.stored) < 56)
    @rule(x=keys)
    def insert(self, x):
        if x in self.stored:
            return
        try:
            self.f.insert(x)
            self.stored.append(x)
        except InsertionError:
            pass

    @rule(data=st.data())
    def delete(self, data):
        if self.stored:
            x = data.draw(st.sampled_from(self.stored))
            assert self.f.delete(x)
            self.stored.remove(x)

    @invariant()
    def no_false_negatives(self):
        assert all(self.f.lookup(x) for x in self.stored)
        assert len(self.f) == len(self.stored) == int(self.f.occupied_.sum())


stateful = settings(max_examples=40, stateful_step_count=60, deadline=None)
TestSingle = SingleMachine.TestCase
TestSingle.settings = stateful
TestSingleReset = SingleResetMachine.TestCase
TestSingleReset.settings = stateful
TestMulti = MultiMachine.TestCase
TestMulti.settings = stateful
TestBaseline = BaselineMachine.TestCase
TestBaseline.settings = stateful
TestPartialKey = PartialKeyMachine.TestCase
TestPartialKey.settings = stateful


@pytest.mark.parametrize("variant", VARIANTS)
def test_random_op_sequences(variant):
    for seed in range(5):
        code, op = run_variant(variant, seed, 20_000)
        assert code == OK, f"{variant} seed {seed}: {describe(code)} at op {op}"


def test_driver_catches_broken_adaptation():
    # a zero selector mask leaves alpha in place, which the locality check must flag
    f = AdaptiveCuckooFilter(n_buckets=16, bits_per_cell=3, selector_bits=1,
                             random_state=0).fit([])
    t, h = f.table_, f.hash_config_
    code, _ = element_backed_ops(_pool(0), 20_000, 0, t.elems, t.occ, f.selectors_,
                                 f.fingerprints_, f.filter_occupied_, h.bucket_keys, f.n_buckets,
                                 h.fp_keys, h.fingerprint_bits, h.sliced, f._mode, 0, True,
                                 True, f.max_kicks, t.rng_state, t.move_elems, t.move_cells, 57)
    assert code == LOCALITY
