"""Block partial sums with an exact fixed-point accumulator.

Every double is an integer multiple of 2**-1074, so a block of doubles can
be summed exactly as a Python integer scaled by 2**FIXED_SHIFT.  Terms are
split per binary exponent and binned with ``np.bincount``; each bin stays
below 2**53 so the float bin sums are exact too.  The final value is a single
correctly rounded division, which makes the result independent of chunking
and of the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import DomainError, NonFiniteTermError

DEFAULT_CHUNK = 1 << 16

# frexp of the smallest subnormal gives exponent -1073, and the integer
# mantissa takes another 53 bits off; shifting by 1126 keeps bins >= 0.
FIXED_SHIFT = 1126
_HALF_BITS = 26
_HALF = 1 << _HALF_BITS
# hi halves are < 2**27 in magnitude, so 2**25 of them sum below 2**52
_BINCOUNT_BATCH = 1 << 25


class TermSource(Protocol):
    start_index: int

    def terms(self, idx: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class BlockPlan:
    """Block ``stage`` of constant size ``block_size`` starting at ``start_index``."""

    start_index: int
    block_size: int
    stage: int = 1

    def __post_init__(self):
        if self.block_size < 1:
            raise DomainError(f"block size must be positive, got {self.block_size}")
        if self.stage < 1:
            raise DomainError(f"stage must be positive, got {self.stage}")

    @property
    def first(self) -> int:
        return self.start_index + self.block_size * (self.stage - 1)

    @property
    def last(self) -> int:
        return self.first + self.block_size - 1

    def halves(self) -> tuple["BlockPlan", "BlockPlan"]:
        """The two half-size blocks that tile this one (block size must be even)."""
        if self.block_size % 2:
            raise DomainError("cannot halve an odd block")
        h = self.block_size // 2
        # shift the start so stage 2j-1 and 2j land on our range
        left = BlockPlan(self.first, h, 1)
        right = BlockPlan(self.first, h, 2)
        return left, right


def exact_fixed(values) -> int:
    """Exact sum of a float64 array as an integer count of 2**-FIXED_SHIFT."""
    v = np.ascontiguousarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        return 0
    bad = ~np.isfinite(v)
    if bad.any():
        pos = int(np.argmax(bad))
        raise NonFiniteTermError(pos, v[pos])
    total = 0
    for lo in range(0, v.size, _BINCOUNT_BATCH):
        total += _fixed_batch(v[lo:lo + _BINCOUNT_BATCH])
    return total


def _fixed_batch(v: np.ndarray) -> int:
    mant, expo = np.frexp(v)
    m = np.ldexp(mant, 53).astype(np.int64)
    e = expo.astype(np.int64) + (FIXED_SHIFT - 53)
    hi = m >> _HALF_BITS
    lo = m - (hi << _HALF_BITS)
    nbins = int(e.max()) + 1
    hs = np.bincount(e, weights=hi.astype(np.float64), minlength=nbins)
    ls = np.bincount(e, weights=lo.astype(np.float64), minlength=nbins)
    total = 0
    for b in np.flatnonzero((hs != 0) | (ls != 0)):
        total += ((int(hs[b]) << _HALF_BITS) + int(ls[b])) << int(b)
    return total


def fixed_to_float(acc: int) -> float:
    """Correctly rounded double nearest to ``acc * 2**-FIXED_SHIFT``."""
    # int / int true division is correctly rounded in CPython
    return acc / (1 << FIXED_SHIFT)


def float_to_fixed(x: float) -> int:
    n, d = float(x).as_integer_ratio()
    q, r = divmod(n << FIXED_SHIFT, d)
    assert r == 0
    return q


def _chunk_fixed(series: TermSource, lo: int, hi: int) -> int:
    idx = np.arange(lo, hi + 1, dtype=np.int64)
    vals = np.asarray(series.terms(idx), dtype=np.float64)
    bad = ~np.isfinite(vals)
    if bad.any():
        pos = int(np.argmax(bad))
        raise NonFiniteTermError(idx[pos], vals[pos])
    return exact_fixed(vals)


def _check_plan(series: TermSource, plan: BlockPlan):
    if plan.first < series.start_index:
        raise DomainError(
            f"block starts at i={plan.first} below the series start {series.start_index}"
        )


def block_fixed(series: TermSource, plan: BlockPlan, chunk: int = DEFAULT_CHUNK,
                workers: int = 1) -> int:
    """Exact fixed-point block sum; see :func:`chunked_parallel_sum`."""
    _check_plan(series, plan)
    if chunk < 1:
        raise DomainError(f"chunk must be positive, got {chunk}")
    chunk = min(chunk, plan.block_size)
    bounds = [(lo, min(lo + chunk - 1, plan.last))
              for lo in range(plan.first, plan.last + 1, chunk)]
    if workers <= 1 or len(bounds) == 1:
        parts = [_chunk_fixed(series, lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _chunk_fixed(series, *b), bounds))
    acc = 0
    for p in parts:  # ascending chunk order
        acc += p
    return acc


def chunked_parallel_sum(series: TermSource, plan: BlockPlan, chunk: int = DEFAULT_CHUNK,
                         workers: int = 1) -> float:
    """Sum of ``series.terms`` over the block, split into fixed chunks.

    Chunks may be evaluated on ``workers`` threads.  The reduction is exact,
    so the returned double is bit-identical for every chunk size and worker
    count.
    """
    return fixed_to_float(block_fixed(series, plan, chunk, workers))


def block_sum(series: TermSource, plan: BlockPlan) -> float:
    return chunked_parallel_sum(series, plan, DEFAULT_CHUNK, 1)


def block_sums(series: TermSource, n: int, stages: int, chunk: int = DEFAULT_CHUNK,
               workers: int = 1) -> np.ndarray:
    """S_j for j = 1..stages over consecutive blocks of size n."""
    out = np.empty(stages, dtype=np.float64)
    for j in range(1, stages + 1):
        out[j - 1] = chunked_parallel_sum(series, BlockPlan(series.start_index, n, j),
                                          chunk, workers)
    return out


class NeumaierSum:
    """Running compensated sum for one-term-at-a-time accumulation."""

    __slots__ = ("s", "c")

    def __init__(self, value: float = 0.0):
        self.s = float(value)
        self.c = 0.0

    def add(self, x: float) -> None:
        s = self.s
        t = s + x
        if abs(s) >= abs(x):
            self.c += (s - t) + x
        else:
            self.c += (x - t) + s
        self.s = t

    @property
    def value(self) -> float:
        return self.s + self.c

    def __float__(self):
        return self.value


def neumaier(values) -> float:
    acc = NeumaierSum()
    for x in values:
        acc.add(float(x))
    return acc.value


def combine(*parts: float) -> float:
    """Correctly rounded sum of a few already-rounded partial sums."""
    return math.fsum(parts)
