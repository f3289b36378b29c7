"""Seedable hash family for bucket indices, fingerprints and partial-key offsets.

Every function here is derived from one keyed 64-bit mixer.  The role of a
hash (bucket index for table ``i``, fingerprint function ``j``, partial-key
offset) only changes the 64-bit key that is mixed into the element, so a
single ``master_seed`` reproduces every value bit for bit.

Elements are handled as unsigned 64-bit integers.  :func:`as_element` maps
user keys (ints, 8-byte strings, longer byte strings, text) to that form.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ._validation import check_keys

__all__ = [
    "HashConfig",
    "as_element",
    "bucket_index",
    "fingerprint",
    "pk_offset",
]

_U64 = np.uint64
_M1 = _U64(0xFF51AFD7ED558CCD)
_M2 = _U64(0xC4CEB9FE1A85EC53)
_S33 = _U64(33)
_S32 = _U64(32)

# role tags folded into the per-function keys
_ROLE_BUCKET = 0x42
_ROLE_FP_SLICE = 0x46
_ROLE_FP_FUNC = 0x66
_ROLE_PK = 0x50

MAX_KEY_BYTES = 255


@njit(cache=True, inline="always")
def fmix64(h):
    h ^= h >> _S33
    h *= _M1
    h ^= h >> _S33
    h *= _M2
    h ^= h >> _S33
    return h


@njit(cache=True, inline="always")
def keyed_hash(x, key):
    return fmix64(fmix64(x ^ key) + key)


@njit(cache=True, inline="always")
def reduce_range(h, n):
    # multiply-high on the top 32 bits; exact for power-of-two n
    return np.int64(((h >> _S32) * _U64(n)) >> _S32)


@njit(cache=True, inline="always")
def bucket_of(x, bkey, n_buckets):
    return reduce_range(keyed_hash(x, bkey), n_buckets)


@njit(cache=True, inline="always")
def fp_digest(x, fkeys):
    return keyed_hash(x, fkeys[0])


@njit(cache=True, inline="always")
def fp_from_digest(x, digest, func_id, fkeys, fbits, sliced):
    mask = (_U64(1) << _U64(fbits)) - _U64(1)
    if sliced:
        return np.uint32((digest >> _U64(func_id * fbits)) & mask)
    return np.uint32(keyed_hash(x, fkeys[func_id + 1]) & mask)


@njit(cache=True, inline="always")
def fp_of(x, func_id, fkeys, fbits, sliced):
    return fp_from_digest(x, keyed_hash(x, fkeys[0]), func_id, fkeys, fbits, sliced)


@njit(cache=True, inline="always")
def pk_offset_of(fp, pkey, n_buckets):
    return np.int64(keyed_hash(_U64(fp), pkey) & _U64(n_buckets - 1))


@njit(cache=True)
def _bucket_many(xs, bkey, n_buckets):
    out = np.empty(xs.shape[0], dtype=np.int64)
    for t in range(xs.shape[0]):
        out[t] = bucket_of(xs[t], bkey, n_buckets)
    return out


@njit(cache=True)
def _fp_many(xs, func_id, fkeys, fbits, sliced):
    out = np.empty(xs.shape[0], dtype=np.uint32)
    for t in range(xs.shape[0]):
        out[t] = fp_of(xs[t], func_id, fkeys, fbits, sliced)
    return out


@njit(cache=True)
def _pk_many(fps, pkey, n_buckets):
    out = np.empty(fps.shape[0], dtype=np.int64)
    for t in range(fps.shape[0]):
        out[t] = pk_offset_of(fps[t], pkey, n_buckets)
    return out


def _derive_key(seed: int, role: int, index: int) -> np.uint64:
    # dispatchers hand back Python ints; re-wrap so the next call types as uint64
    tag = np.uint64(fmix64(np.uint64((role << 32) | index)))
    return np.uint64(keyed_hash(np.uint64(seed), tag))


@dataclass(frozen=True)
class HashConfig:
    """Parameters of one hash family instance.

    ``n_buckets`` is the bucket count per subtable.  Any positive count is
    accepted by :func:`bucket_index`; partial-key offsets require a power of
    two.  ``family_size`` is the number of fingerprint functions
    (``2**s`` for the selector variant, ``c`` for the positional one).
    """

    master_seed: int
    d: int
    n_buckets: int
    fingerprint_bits: int
    family_size: int = 1
    bucket_keys: np.ndarray = field(init=False, repr=False, compare=False)
    fp_keys: np.ndarray = field(init=False, repr=False, compare=False)
    pk_key: np.uint64 = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 1 <= self.n_buckets <= 2**32:
            raise ValueError("n_buckets must be in [1, 2**32]")
        if not 1 <= self.fingerprint_bits <= 30:
            raise ValueError("fingerprint_bits must be in [1, 30]")
        if self.family_size < 1:
            raise ValueError("family_size must be >= 1")
        seed = self.master_seed
        bkeys = np.array([_derive_key(seed, _ROLE_BUCKET, i) for i in range(self.d)],
                         dtype=np.uint64)
        fkeys = np.empty(self.family_size + 1, dtype=np.uint64)
        fkeys[0] = _derive_key(seed, _ROLE_FP_SLICE, 0)
        for j in range(self.family_size):
            fkeys[j + 1] = _derive_key(seed, _ROLE_FP_FUNC, j)
        bkeys.setflags(write=False)
        fkeys.setflags(write=False)
        object.__setattr__(self, "bucket_keys", bkeys)
        object.__setattr__(self, "fp_keys", fkeys)
        object.__setattr__(self, "pk_key", _derive_key(seed, _ROLE_PK, 0))

    @property
    def sliced(self) -> bool:
        """True when all fingerprints of an element come from one digest."""
        return self.family_size * self.fingerprint_bits <= 64

    @property
    def power_of_two(self) -> bool:
        return self.n_buckets & (self.n_buckets - 1) == 0


def as_element(key) -> np.uint64:
    """Canonical 64-bit form of a user key.

    Integers in ``[0, 2**64)`` and 8-byte strings (little-endian) map
    one-to-one.  Other byte strings up to 255 bytes, and text (UTF-8), map
    through an 8-byte BLAKE2b digest.
    """
    if isinstance(key, (int, np.integer)) and not isinstance(key, (bool, np.bool_)):
        key = int(key)
        if not 0 <= key < 2**64:
            raise ValueError(f"integer key out of 64-bit range: {key}")
        return np.uint64(key)
    if isinstance(key, str):
        key = key.encode("utf-8")
    if isinstance(key, (bytes, bytearray, memoryview)):
        key = bytes(key)
        if len(key) > MAX_KEY_BYTES:
            raise ValueError(f"key longer than {MAX_KEY_BYTES} bytes")
        if len(key) == 8:
            return np.uint64(int.from_bytes(key, "little"))
        digest = hashlib.blake2b(key, digest_size=8).digest()
        return np.uint64(int.from_bytes(digest, "little"))
    raise TypeError(f"unsupported key type: {type(key).__name__}")


def _table_range(i: int, cfg: HashConfig) -> None:
    if not 0 <= i < cfg.d:
        raise ValueError(f"table index {i} outside [0, {cfg.d})")


def bucket_index(x, i: int, cfg: HashConfig):
    """Bucket of element(s) ``x`` in subtable ``i`` (0-based)."""
    _table_range(i, cfg)
    if np.ndim(x) == 0 and not isinstance(x, np.ndarray):
        return int(bucket_of(as_element(x), cfg.bucket_keys[i], cfg.n_buckets))
    return _bucket_many(check_keys(x), cfg.bucket_keys[i], cfg.n_buckets)


def fingerprint(x, func_id: int, cfg: HashConfig):
    """Value of fingerprint function ``func_id`` on element(s) ``x``."""
    if not 0 <= func_id < cfg.family_size:
        raise ValueError(f"func_id {func_id} outside [0, {cfg.family_size})")
    if np.ndim(x) == 0 and not isinstance(x, np.ndarray):
        return int(fp_of(as_element(x), func_id, cfg.fp_keys,
                         cfg.fingerprint_bits, cfg.sliced))
    return _fp_many(check_keys(x), func_id, cfg.fp_keys, cfg.fingerprint_bits, cfg.sliced)


def pk_offset(fp, cfg: HashConfig):
    """XOR offset of the partial-key alternate bucket for fingerprint ``fp``."""
    if not cfg.power_of_two:
        raise ValueError("partial-key offsets need a power-of-two bucket count")
    limit = 1 << cfg.fingerprint_bits
    if np.ndim(fp) == 0:
        if not 0 <= int(fp) < limit:
            raise ValueError("fingerprint outside its bit width")
        return int(pk_offset_of(np.uint32(fp), cfg.pk_key, cfg.n_buckets))
    fps = np.asarray(fp)
    if fps.size and (fps.min() < 0 or fps.max() >= limit):
        raise ValueError("fingerprint outside its bit width")
    return _pk_many(fps.astype(np.uint32), cfg.pk_key, cfg.n_buckets)
