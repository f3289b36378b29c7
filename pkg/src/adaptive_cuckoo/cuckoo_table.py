"""Element-storing cuckoo hash table with ``d`` subtables of ``b`` buckets of ``c`` cells.

The table is the exact membership structure behind every element-backed
filter in this package.  Insertions report each displacement they perform
so that a filter can mirror the table cell for cell.

Addresses are 0-based ``(table, bucket, cell)`` triples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from numba import njit

from ._rng import make_state, rng_below
from ._validation import InsertionError, UsageError, check_keys, check_positive_int
from .hashing import HashConfig, as_element, bucket_of

DEFAULT_MAX_KICKS = 500

INSERT_OK = 0
INSERT_DUPLICATE = 1
INSERT_FAILED = 2


class CellAddress(NamedTuple):
    table: int
    bucket: int
    cell: int


class Move(NamedTuple):
    """One write performed by an insertion.

    ``source`` is None for the newly inserted element, otherwise the cell the
    element was evicted from.
    """

    element: int
    source: CellAddress | None
    target: CellAddress


@dataclass(frozen=True)
class TableGeometry:
    d: int
    c: int
    b: int

    def __post_init__(self):
        for name in ("d", "c", "b"):
            check_positive_int(getattr(self, name), name)
        if self.d * self.c < 2:
            raise ValueError("need at least two candidate cells per element")

    @property
    def m(self) -> int:
        return self.d * self.b * self.c

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.d, self.b, self.c)

    @classmethod
    def from_cells(cls, m: int, d: int, c: int) -> "TableGeometry":
        if m % (d * c):
            raise ValueError(f"{m} cells do not split into {d} tables of {c}-cell buckets")
        return cls(d=d, c=c, b=m // (d * c))


@dataclass
class Placement:
    addr: CellAddress
    moved: list[Move] = field(default_factory=list)


@njit(cache=True)
def table_find(elems, occ, x, bkeys, nb):
    d = elems.shape[0]
    c = elems.shape[2]
    for i in range(d):
        beta = bucket_of(x, bkeys[i], nb)
        for k in range(c):
            if occ[i, beta, k] and elems[i, beta, k] == x:
                return i, beta, k
    return -1, -1, -1


@njit(cache=True)
def _first_free(elems, occ, x, bkeys, nb):
    d = elems.shape[0]
    c = elems.shape[2]
    for i in range(d):
        beta = bucket_of(x, bkeys[i], nb)
        for k in range(c):
            if not occ[i, beta, k]:
                return i, beta, k
    return -1, -1, -1


@njit(cache=True)
def table_insert(elems, occ, x, bkeys, nb, max_kicks, rs, move_elems, move_cells):
    """Insert ``x``; returns ``(status, n_moves, unplaced)``.

    Row ``t`` of ``move_cells`` holds the source cell (``-1`` for the new
    element) and the target cell of the ``t``-th write.
    """
    fi, fb, fk = table_find(elems, occ, x, bkeys, nb)
    if fi >= 0:
        return INSERT_DUPLICATE, 0, x
    d = elems.shape[0]
    c = elems.shape[2]
    i, beta, k = _first_free(elems, occ, x, bkeys, nb)
    if i >= 0:
        elems[i, beta, k] = x
        occ[i, beta, k] = True
        move_elems[0] = x
        move_cells[0, 0] = -1
        move_cells[0, 1] = -1
        move_cells[0, 2] = -1
        move_cells[0, 3] = i
        move_cells[0, 4] = beta
        move_cells[0, 5] = k
        return INSERT_OK, 1, x

    cur = x
    pi = -1
    pb = -1
    pk = -1
    n = 0
    for _ in range(max_kicks):
        # never hand the evictee straight back to the cell it just left
        while True:
            i = rng_below(rs, d)
            k = rng_below(rs, c)
            beta = bucket_of(cur, bkeys[i], nb)
            if not (i == pi and beta == pb and k == pk):
                break
        victim = elems[i, beta, k]
        elems[i, beta, k] = cur
        move_elems[n] = cur
        move_cells[n, 0] = pi
        move_cells[n, 1] = pb
        move_cells[n, 2] = pk
        move_cells[n, 3] = i
        move_cells[n, 4] = beta
        move_cells[n, 5] = k
        n += 1
        cur = victim
        pi = i
        pb = beta
        pk = k
        i, beta, k = _first_free(elems, occ, cur, bkeys, nb)
        if i >= 0:
            elems[i, beta, k] = cur
            occ[i, beta, k] = True
            move_elems[n] = cur
            move_cells[n, 0] = pi
            move_cells[n, 1] = pb
            move_cells[n, 2] = pk
            move_cells[n, 3] = i
            move_cells[n, 4] = beta
            move_cells[n, 5] = k
            return INSERT_OK, n + 1, x
    return INSERT_FAILED, n, cur


@njit(cache=True)
def table_delete(elems, occ, x, bkeys, nb):
    i, beta, k = table_find(elems, occ, x, bkeys, nb)
    if i >= 0:
        occ[i, beta, k] = False
        elems[i, beta, k] = 0
    return i, beta, k


@njit(cache=True)
def _table_insert_many(elems, occ, xs, bkeys, nb, max_kicks, rs, move_elems, move_cells):
    for t in range(xs.shape[0]):
        status, n, unplaced = table_insert(elems, occ, xs[t], bkeys, nb, max_kicks, rs,
                                           move_elems, move_cells)
        if status != INSERT_OK:
            return t, status, unplaced
    return xs.shape[0], INSERT_OK, np.uint64(0)


def decode_moves(n: int, move_elems: np.ndarray, move_cells: np.ndarray) -> list[Move]:
    out = []
    for t in range(n):
        row = move_cells[t]
        src = None if row[0] < 0 else CellAddress(int(row[0]), int(row[1]), int(row[2]))
        out.append(Move(int(move_elems[t]), src, CellAddress(int(row[3]), int(row[4]), int(row[5]))))
    return out


class CuckooTable:
    """Cuckoo hash table over canonical 64-bit elements.

    Insertion scans subtables in order ``0..d-1`` and cells in order for a
    free slot.  Otherwise it evicts a uniformly chosen cell of a uniformly
    chosen candidate bucket and re-inserts the evictee the same way, never
    returning an evictee to the cell it just left.  After ``max_kicks``
    evictions it raises :class:`InsertionError`; the table then holds every
    element except the reported ``unplaced`` one.
    """

    def __init__(self, geometry: TableGeometry, hash_config: HashConfig,
                 max_kicks: int = DEFAULT_MAX_KICKS, seed: int = 0):
        if hash_config.d != geometry.d or hash_config.n_buckets != geometry.b:
            raise ValueError("hash configuration does not match the table geometry")
        self.geometry = geometry
        self.hash_config = hash_config
        self.max_kicks = check_positive_int(max_kicks, "max_kicks")
        self.elems = np.zeros(geometry.shape, dtype=np.uint64)
        self.occ = np.zeros(geometry.shape, dtype=np.bool_)
        self.rng_state = make_state(seed)
        self.move_elems = np.zeros(self.max_kicks + 1, dtype=np.uint64)
        self.move_cells = np.zeros((self.max_kicks + 1, 6), dtype=np.int64)
        self.size = 0

    def __len__(self):
        return self.size

    def __contains__(self, x):
        return self.lookup(x) is not None

    def lookup(self, x) -> CellAddress | None:
        x = as_element(x)
        i, beta, k = table_find(self.elems, self.occ, x, self.hash_config.bucket_keys,
                                self.geometry.b)
        return None if i < 0 else CellAddress(i, beta, k)

    def element_at(self, addr: CellAddress):
        if not self.occ[addr]:
            return None
        return int(self.elems[addr])

    def insert(self, x) -> Placement:
        x = as_element(x)
        status, n, unplaced = table_insert(
            self.elems, self.occ, x, self.hash_config.bucket_keys, self.geometry.b,
            self.max_kicks, self.rng_state, self.move_elems, self.move_cells)
        return self._placement(x, status, n, unplaced)

    def _placement(self, x, status, n, unplaced) -> Placement:
        if status == INSERT_DUPLICATE:
            raise UsageError(f"element {int(x)} is already stored")
        moved = decode_moves(n, self.move_elems, self.move_cells)
        if status == INSERT_FAILED:
            # x went in, one evictee came out
            raise InsertionError(
                f"no free cell after {self.max_kicks} displacements at load {self.load():.4f}",
                unplaced=int(unplaced))
        self.size += 1
        return Placement(addr=moved[0].target, moved=moved)

    def insert_many(self, xs) -> int:
        xs = check_keys(xs)
        done, status, unplaced = _table_insert_many(
            self.elems, self.occ, xs, self.hash_config.bucket_keys, self.geometry.b,
            self.max_kicks, self.rng_state, self.move_elems, self.move_cells)
        self.size += done
        if status == INSERT_DUPLICATE:
            raise UsageError(f"element {int(xs[done])} is already stored")
        if status == INSERT_FAILED:
            raise InsertionError(
                f"insertion {done} of {len(xs)} failed at load {self.load():.4f}",
                unplaced=int(unplaced))
        return done

    def delete(self, x) -> CellAddress | None:
        x = as_element(x)
        i, beta, k = table_delete(self.elems, self.occ, x, self.hash_config.bucket_keys,
                                  self.geometry.b)
        if i < 0:
            return None
        self.size -= 1
        return CellAddress(i, beta, k)

    def load(self) -> float:
        return self.size / self.geometry.m

    def elements(self) -> np.ndarray:
        return self.elems[self.occ]
