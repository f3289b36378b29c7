"""Insert sets and query streams: synthetic (uniform or Zipf) and flow-trace replay.

Flow-key files are UTF-8 text with one key per line (LF endings).  Blank
lines and lines starting with ``#`` are skipped.  A key is either a 5-tuple
``src_ip,dst_ip,src_port,dst_port,proto`` (canonicalised on load) or any
other token of at most 255 bytes without whitespace or commas.
"""

from __future__ import annotations

import ipaddress
import math
from array import array
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_fraction, check_positive_int
from .cuckoo_table import TableGeometry
from .hashing import MAX_KEY_BYTES, as_element

SUPPORTED_RATIOS = (1, 2, 3, 4, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
CHUNK = 1 << 20
LOAD_WINDOW = 0.05


class TraceFormatError(ValueError):
    def __init__(self, path, lineno, reason):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.lineno = lineno


@dataclass(frozen=True)
class SyntheticSpec:
    target_load: float = 0.95
    ratio: float = 10
    n_e: float = 100
    skew: float = 0.0
    seed: int = 0
    max_queries: int | None = None

    def __post_init__(self):
        check_fraction(self.target_load, "target_load", open_low=True, open_high=True)
        if self.ratio <= 0 or self.n_e <= 0 or self.skew < 0:
            raise ValueError("ratio and n_e must be positive, skew non-negative")


@dataclass(frozen=True)
class TraceSpec:
    path: str
    ratio: float = 10
    seed: int = 0
    target_load: float = 0.95


@dataclass
class QueryStream:
    """Ordered queries over a pool of distinct keys.

    ``keys[q]`` is a canonical element and ``is_member[q]`` its ground truth.
    The order is either explicit (``order``, one pool index per query) or
    drawn in fixed-size chunks from ``seed``: uniformly when ``cdf`` is None,
    otherwise by inverting ``cdf`` (pool index = popularity rank).
    """

    keys: np.ndarray
    is_member: np.ndarray
    length: int
    order: np.ndarray | None = None
    cdf: np.ndarray | None = field(default=None, repr=False)
    seed: int = 0

    def chunks(self, size: int = CHUNK):
        if self.order is not None:
            for start in range(0, self.length, size):
                yield self.order[start:start + size]
            return
        rng = np.random.default_rng(self.seed)
        left = self.length
        while left > 0:
            n = min(size, left)
            if self.cdf is None:
                yield rng.integers(0, len(self.keys), size=n, dtype=np.int64)
            else:
                idx = np.searchsorted(self.cdf, rng.random(n), side="right")
                yield np.minimum(idx, len(self.keys) - 1).astype(np.int64)
            left -= n

    def indices(self) -> np.ndarray:
        parts = list(self.chunks())
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    def __len__(self):
        return self.length

    def __iter__(self):
        for chunk in self.chunks():
            for q in chunk:
                yield int(self.keys[q]), bool(self.is_member[q])

    @property
    def n_negative_keys(self) -> int:
        return int(np.count_nonzero(~self.is_member))


def distinct_random_keys(n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` distinct uniform 64-bit keys; repeats are redrawn in place."""
    keys = rng.integers(0, 2**64, size=n, dtype=np.uint64)
    while True:
        _, first = np.unique(keys, return_index=True)
        if len(first) == n:
            return keys
        dup = np.ones(n, dtype=bool)
        dup[first] = False
        keys[dup] = rng.integers(0, 2**64, size=int(dup.sum()), dtype=np.uint64)


def zipf_cdf(n: int, skew: float) -> np.ndarray:
    weights = np.arange(1, n + 1, dtype=float) ** -skew
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def gen_synthetic(spec: SyntheticSpec, geometry: TableGeometry) -> tuple[np.ndarray, QueryStream]:
    """Insert set at the target load and a stream of non-member queries.

    ``|S| = round(target_load * m)``, ``A = round(ratio * |S|)`` fresh keys and
    ``N = round(n_e * A)`` queries (capped at ``max_queries``).
    """
    n_set = round(spec.target_load * geometry.m)
    n_neg = max(round(spec.ratio * n_set), 1)
    n_queries = max(round(spec.n_e * n_neg), 1)
    if spec.max_queries is not None:
        n_queries = min(n_queries, spec.max_queries)
    ss = np.random.SeedSequence(spec.seed)
    key_seed, order_seed = ss.spawn(2)
    keys = distinct_random_keys(n_set + n_neg, np.random.default_rng(key_seed))
    inserted = keys[:n_set]
    negatives = keys[n_set:]
    cdf = zipf_cdf(n_neg, spec.skew) if spec.skew > 0 else None
    stream = QueryStream(keys=negatives, is_member=np.zeros(n_neg, dtype=bool),
                         length=n_queries, cdf=cdf,
                         seed=int(order_seed.generate_state(1, dtype=np.uint64)[0]))
    return inserted, stream


def fresh_negatives(n: int, exclude: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """``n`` distinct keys disjoint from ``exclude``, each meant to be queried once."""
    out = distinct_random_keys(n, rng)
    clash = np.isin(out, exclude)
    while clash.any():
        out[clash] = rng.integers(0, 2**64, size=int(clash.sum()), dtype=np.uint64)
        clash = np.isin(out, exclude) | _repeated(out)
    return out


def _repeated(keys):
    _, first = np.unique(keys, return_index=True)
    mask = np.ones(len(keys), dtype=bool)
    mask[first] = False
    return mask


# --- traces -------------------------------------------------------------------

@dataclass
class Trace:
    """Packets of a flow trace; ``packets[t]`` indexes ``flows`` in first-arrival order."""

    flows: list[str]
    packets: np.ndarray
    elements: np.ndarray

    def __len__(self):
        return len(self.packets)

    @property
    def n_flows(self) -> int:
        return len(self.flows)

    def keys(self) -> list[str]:
        return [self.flows[i] for i in self.packets]


def canonical_key(raw: str) -> str:
    """Validate one key; 5-tuples come back in canonical spelling."""
    if not raw:
        raise ValueError("empty key")
    if any(ch.isspace() for ch in raw):
        raise ValueError("whitespace inside key")
    if len(raw.encode("utf-8")) > MAX_KEY_BYTES:
        raise ValueError(f"key longer than {MAX_KEY_BYTES} bytes")
    if "," not in raw:
        return raw
    parts = raw.split(",")
    if len(parts) != 5:
        raise ValueError(f"expected 5 comma-separated fields, got {len(parts)}")
    src, dst, sport, dport, proto = parts
    try:
        src_ip = ipaddress.ip_address(src)
        dst_ip = ipaddress.ip_address(dst)
    except ValueError as exc:
        raise ValueError(str(exc)) from None
    nums = []
    for name, text, top in (("src port", sport, 65535), ("dst port", dport, 65535),
                            ("protocol", proto, 255)):
        if not text.isdigit() or int(text) > top:
            raise ValueError(f"bad {name} {text!r}")
        nums.append(int(text))
    return f"{src_ip},{dst_ip},{nums[0]},{nums[1]},{nums[2]}"


def load_trace(path) -> Trace:
    """Read a flow-key file, preserving packet order."""
    path = Path(path)
    index: dict[str, int] = {}
    flows: list[str] = []
    packets = array("q")
    with path.open("r", encoding="utf-8", newline="\n") as fh:
        for lineno, line in enumerate(fh, 1):
            raw = line.rstrip("\n").rstrip("\r").strip()
            if not raw or raw.startswith("#"):
                continue
            idx = index.get(raw)
            if idx is None:
                try:
                    key = canonical_key(raw)
                except ValueError as exc:
                    raise TraceFormatError(path, lineno, str(exc)) from None
                idx = index.setdefault(key, len(flows))
                if idx == len(flows):
                    flows.append(key)
                index[raw] = idx
            packets.append(idx)
    if not packets:
        raise TraceFormatError(path, 0, "trace holds no keys")
    elements = np.fromiter((as_element(k) for k in flows), dtype=np.uint64, count=len(flows))
    if len(np.unique(elements)) != len(elements):
        raise ValueError(f"{path}: two distinct flow keys share a 64-bit digest")
    return Trace(flows=flows, packets=np.frombuffer(packets, dtype=np.int64).copy(),
                 elements=elements)


def insert_count(n_flows: int, ratio: float) -> int:
    return round(n_flows / (1 + ratio))


def _bucket_count(n_set: int, target_load: float, cells_per_bucket_row: int) -> tuple[int, float]:
    b = max(math.ceil(n_set / (target_load * cells_per_bucket_row)), 1)
    return b, n_set / (b * cells_per_bucket_row)


def _feasible(n_flows, ratio, target_load, dc):
    n_set = insert_count(n_flows, ratio)
    if n_set < 1 or n_set >= n_flows:
        return False
    _, load = _bucket_count(n_set, target_load, dc)
    return target_load - LOAD_WINDOW <= load <= target_load


def split_trace(trace: Trace, ratio: float, target_load: float = 0.95, d: int = 4,
                c: int = 1) -> tuple[TableGeometry, np.ndarray, QueryStream]:
    """Size a table for the first ``|S|`` flows and turn every packet into a query.

    ``|S| = round(flows / (1 + ratio))``; the bucket count is the smallest
    giving load at most ``target_load``, and the load must stay within
    ``LOAD_WINDOW`` below it.
    """
    n_flows = trace.n_flows
    if n_flows < 2:
        raise ValueError("a trace needs at least two distinct flows")
    check_fraction(target_load, "target_load", open_low=True)
    n_set = insert_count(n_flows, ratio)
    if not _feasible(n_flows, ratio, target_load, d * c):
        near = [r for r in SUPPORTED_RATIOS if _feasible(n_flows, r, target_load, d * c)]
        hint = (f"; nearest feasible ratio is {min(near, key=lambda r: abs(r - ratio))}"
                if near else "; no supported ratio fits this trace")
        raise ValueError(f"ratio {ratio} puts |S|={n_set} outside the load window{hint}")
    b, _ = _bucket_count(n_set, target_load, d * c)
    geometry = TableGeometry(d=d, c=c, b=b)
    member = np.arange(n_flows) < n_set
    stream = QueryStream(keys=trace.elements, is_member=member, length=len(trace.packets),
                         order=trace.packets)
    return geometry, trace.elements[:n_set], stream


def gen_trace(path, flows: int, packets: int, zipf: float = 1.0, seed: int = 0) -> Path:
    """Write a surrogate 5-tuple trace with Zipf-distributed flow sizes.

    Every flow gets one packet; the remaining ``packets - flows`` are spread
    over flows with probability proportional to ``rank**-zipf``.  Packets are
    shuffled uniformly.
    """
    check_positive_int(flows, "flows")
    check_positive_int(packets, "packets")
    if packets < flows:
        raise ValueError("need at least one packet per flow")
    rng = np.random.default_rng(seed)
    weights = np.arange(1, flows + 1, dtype=float) ** -zipf
    sizes = 1 + rng.multinomial(packets - flows, weights / weights.sum())
    tuples = _distinct_tuples(flows, rng)
    names = [f"{ipaddress.IPv4Address(int(s))},{ipaddress.IPv4Address(int(t))},{sp},{dp},{pr}"
             for s, t, sp, dp, pr in tuples.tolist()]
    order = rng.permutation(np.repeat(np.arange(flows, dtype=np.int64), sizes))
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# surrogate trace: flows={flows} packets={packets} zipf={zipf} seed={seed}\n")
        for start in range(0, len(order), CHUNK):
            fh.write("\n".join(names[i] for i in order[start:start + CHUNK].tolist()))
            fh.write("\n")
    return path


def _distinct_tuples(n: int, rng: np.random.Generator) -> np.ndarray:
    cols = np.empty((0, 5), dtype=np.int64)
    while len(cols) < n:
        need = n - len(cols)
        fresh = np.column_stack([
            rng.integers(0, 2**32, size=need), rng.integers(0, 2**32, size=need),
            rng.integers(1024, 65536, size=need), rng.integers(1, 65536, size=need),
            rng.choice(np.array([6, 17]), size=need),
        ])
        cols = np.concatenate([cols, fresh])
        _, first = np.unique(cols, axis=0, return_index=True)
        cols = cols[np.sort(first)]
    return cols[:n]
