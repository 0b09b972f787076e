"""Segmented sieve for the Moebius function and a small binary table format.

File layout: the 7 bytes ``MUTABLE`` followed by a one-byte ASCII version
digit, a little-endian u64 N, then N signed bytes mu(1..N).
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (DomainError, TableFormatError, TableRangeError, TableVersionError,
                     TruncatedTableError)

MAGIC_PREFIX = b"MUTABLE"
FORMAT_VERSION = 1
HEADER = struct.Struct("<7scQ")
DEFAULT_SEGMENT = 1 << 20


def small_primes(limit: int) -> np.ndarray:
    """Primes p <= limit (plain sieve of Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def mobius_segment(lo: int, hi: int, primes: np.ndarray | None = None) -> np.ndarray:
    """mu(n) for lo <= n < hi as int8.

    ``primes`` must contain every prime up to isqrt(hi - 1).
    """
    if lo < 1 or hi < lo:
        raise DomainError(f"bad segment [{lo}, {hi})")
    size = hi - lo
    if size == 0:
        return np.zeros(0, dtype=np.int8)
    root = math.isqrt(hi - 1)
    if primes is None:
        primes = small_primes(root)
    mu = np.ones(size, dtype=np.int8)
    # product of the distinct small primes found so far; a leftover factor
    # above sqrt(n) shows up as prod < n
    prod = np.ones(size, dtype=np.int64)
    for p in primes:
        p = int(p)
        if p > root:
            break
        s = (-lo) % p
        mu[s::p] *= -1
        prod[s::p] *= p
        q = p * p
        s = (-lo) % q
        mu[s::q] = 0
    n = np.arange(lo, hi, dtype=np.int64)
    mu[prod < n] *= -1
    return mu


def mobius_range(lo: int, hi: int) -> np.ndarray:
    """mu(n) for lo <= n <= hi, computed on the fly."""
    return mobius_segment(lo, hi + 1)


def mobius_values(idx) -> np.ndarray:
    """mu at arbitrary positive indices (sieves the covering range)."""
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        return np.zeros(idx.shape, dtype=np.int8)
    lo, hi = int(idx.min()), int(idx.max())
    if lo < 1:
        raise DomainError("mu is defined for n >= 1")
    return mobius_segment(lo, hi + 1)[idx - lo]


@dataclass(eq=False)
class MobiusTable:
    N: int
    values: np.ndarray  # values[n - 1] = mu(n)
    format_version: int = FORMAT_VERSION
    _prefix: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.values) != self.N:
            raise DomainError(f"table holds {len(self.values)} values, header says {self.N}")

    def __eq__(self, other):
        if not isinstance(other, MobiusTable):
            return NotImplemented
        return self.N == other.N and np.array_equal(self.values, other.values)

    def mu(self, n: int) -> int:
        if not 1 <= n <= self.N:
            raise TableRangeError(f"n={n} outside table range 1..{self.N}")
        return int(self.values[n - 1])

    def lookup(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 1 or idx.max() > self.N):
            raise TableRangeError(
                f"indices {int(idx.min())}..{int(idx.max())} exceed table range 1..{self.N}")
        return np.asarray(self.values[idx - 1], dtype=np.int8)

    def covers(self, n: int) -> bool:
        return n <= self.N

    def prefix(self) -> np.ndarray:
        if self._prefix is None:
            dt = np.int32 if self.N < 2**31 else np.int64
            self._prefix = np.cumsum(self.values, dtype=dt)
        return self._prefix


def _segments(N: int, segment: int):
    return [(lo, min(lo + segment, N + 1)) for lo in range(1, N + 1, segment)]


def build(N: int, segment: int = DEFAULT_SEGMENT, workers: int = 1) -> MobiusTable:
    """In-memory table of mu(1..N)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if segment < 1:
        raise DomainError(f"segment must be >= 1, got {segment}")
    primes = small_primes(math.isqrt(N))
    out = np.empty(N, dtype=np.int8)

    def fill(bounds):
        lo, hi = bounds
        out[lo - 1:hi - 1] = mobius_segment(lo, hi, primes)

    segs = _segments(N, segment)
    if workers <= 1:
        for b in segs:
            fill(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, segs))
    return MobiusTable(N, out)


def build_to_file(N: int, path, segment: int = DEFAULT_SEGMENT) -> None:
    """Stream segments straight to disk; memory stays O(segment + sqrt N)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if segment < 1:
        raise DomainError(f"segment must be >= 1, got {segment}")
    primes = small_primes(math.isqrt(N))
    tmp = f"{os.fspath(path)}.part"
    with open(tmp, "wb") as fh:
        fh.write(HEADER.pack(MAGIC_PREFIX, str(FORMAT_VERSION).encode(), N))
        for lo, hi in _segments(N, segment):
            fh.write(mobius_segment(lo, hi, primes).tobytes())
    os.replace(tmp, path)


def save(table: MobiusTable, path) -> None:
    tmp = f"{os.fspath(path)}.part"
    with open(tmp, "wb") as fh:
        fh.write(HEADER.pack(MAGIC_PREFIX, str(FORMAT_VERSION).encode(), table.N))
        fh.write(np.ascontiguousarray(table.values, dtype=np.int8).tobytes())
    os.replace(tmp, path)


def load(path, mmap: bool = False) -> MobiusTable:
    with open(path, "rb") as fh:
        head = fh.read(HEADER.size)
    if not MAGIC_PREFIX.startswith(head[:7]):
        raise TableFormatError(f"{path}: bad magic {head[:7]!r}")
    if len(head) < HEADER.size:
        raise TruncatedTableError(f"{path}: header is {len(head)} bytes, need {HEADER.size}")
    magic, ver, N = HEADER.unpack(head)
    if magic != MAGIC_PREFIX:
        raise TableFormatError(f"{path}: bad magic {magic!r}")
    if ver != str(FORMAT_VERSION).encode():
        raise TableVersionError(f"{path}: format version {ver!r}, expected {FORMAT_VERSION}")
    size = os.path.getsize(path)
    if size < HEADER.size + N:
        raise TruncatedTableError(
            f"{path}: holds {size - HEADER.size} of {N} values")
    if mmap:
        vals = np.memmap(path, dtype=np.int8, mode="r", offset=HEADER.size, shape=(N,))
    else:
        vals = np.fromfile(path, dtype=np.int8, count=N, offset=HEADER.size)
    return MobiusTable(N, vals)


def mertens(table: MobiusTable, x: int) -> int:
    """Exact sum of mu(n) for n <= x."""
    if x < 0 or x > table.N:
        raise TableRangeError(f"x={x} outside table range 0..{table.N}")
    if x == 0:
        return 0
    if table._prefix is not None:
        return int(table._prefix[x - 1])
    # one-off query: avoid materialising the full prefix array
    return int(np.asarray(table.values[:x]).sum(dtype=np.int64))
