"""Series terms, parameter domains and the matching bound sequences c_j."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import mobius as _mobius
from .errors import DomainError, MissingReferenceError
from .summation import DEFAULT_CHUNK, BlockPlan, block_sums, chunked_parallel_sum

EPS = 1e-10
# admissible |a| for the |sin i| family
ETA = 1e-10
# small shift that lets the bound sit just above the reference at a = a0
ADJUST = 9e-11
# margin for the |sin i| family, + for b < 2 and - otherwise
SIN_MARGIN = 1e-5

CACHE_ENV = "BAYES_SERIES_CACHE"

_SQ = math.sqrt(0.5)
_SIN_QUARTER = np.array([0.0, _SQ, 1.0, _SQ, 0.0, -_SQ, -1.0, -_SQ])


def _f(i):
    return np.asarray(i, dtype=np.float64)


def _pow_one_minus(x: np.ndarray, i: np.ndarray) -> np.ndarray:
    """(1 - x)**i, through log1p where the base is positive."""
    out = np.empty_like(x)
    pos = x < 1.0
    out[pos] = np.exp(i[pos] * np.log1p(-x[pos]))
    neg = ~pos
    if neg.any():
        with np.errstate(over="ignore"):
            out[neg] = np.power(1.0 - x[neg], i[neg])
    return out


def _t_example1(i, th, mu):
    return 1.0 / np.log(_f(i))


def _t_example2(i, th, mu):
    fi = _f(i)
    li = np.log(fi)
    return _pow_one_minus((li + th["a"] * np.log(li)) / fi, fi)


def _t_example3(i, th, mu):
    fi = _f(i)
    li = np.log(fi)
    x = li / fi * np.exp(math.log(th["a"]) * np.log(li) / li)
    return _pow_one_minus(x, fi)


def _t_example4(i, th, mu):
    i = np.asarray(i, dtype=np.int64)
    fi = _f(i)
    li = np.log(fi)
    sign = np.where(i % 2 == 0, 1.0, -1.0)
    x = li / fi + np.log(li) / fi * np.cos(1.0 / fi) ** 2 * (th["a"] + sign * th["b"])
    return _pow_one_minus(x, fi)


def _t_example5(i, th, mu):
    i = np.asarray(i, dtype=np.int64)
    fi = _f(i)
    li = np.log(fi)
    wobble = np.sin(np.sqrt(np.log(li) / li)) ** 2
    x = li / fi * (th["a"] * (1.0 + wobble) + th["b"] * _SIN_QUARTER[i % 8])
    return _pow_one_minus(x, fi)


def _t_example6(i, th, mu):
    fi = _f(i)
    return np.power(fi, th["b"] - 3.0) / (th["a"] + np.abs(np.sin(fi)))


def _t_example7(i, th, mu):
    fi = _f(i)
    # reduce a*i mod 2 first so dyadic a stays exact
    s = np.abs(np.sin(math.pi * np.fmod(th["a"] * fi, 2.0)))
    return np.power(s, fi) / np.power(fi, th["b"])


def _t_alternating(i, th, mu):
    i = np.asarray(i, dtype=np.int64)
    return np.where(i % 2 == 1, 1.0, -1.0)


def _t_mobius(i, th, mu):
    i = np.asarray(i, dtype=np.int64)
    vals = mu.lookup(i) if mu is not None else _mobius.mobius_values(i)
    return vals.astype(np.float64) / np.power(_f(i), th["a"])


def _t_zeta(i, th, mu):
    return np.power(_f(i), -th["a"])


def _any(v):
    return True


@dataclass(frozen=True)
class _Def:
    start: int
    params: tuple
    fn: Callable
    checks: Mapping[str, tuple]  # name -> (predicate, description)
    block_multiple: int = 1
    bound: str = "inverse_sqrt"
    summary: str = ""


_DEFS: dict[str, _Def] = {
    "example1": _Def(2, (), _t_example1, {}, 1, "example1", "1/log i"),
    "example2": _Def(2, ("a",), _t_example2, {"a": (_any, "real")}, 1, "example2",
                     "(1 - log i/i - a loglog i/i)^i"),
    "example3": _Def(3, ("a",), _t_example3, {"a": (lambda v: v > 0, "> 0")}, 1, "example3",
                     "(1 - (log i/i) a^(loglog i/log i))^i"),
    "example4": _Def(3, ("a", "b"), _t_example4,
                     {"a": (lambda v: v >= 0, ">= 0"), "b": (lambda v: v >= 0, ">= 0")},
                     2, "example4",
                     "(1 - log i/i - (loglog i/i) cos^2(1/i) (a + (-1)^i b))^i"),
    "example5": _Def(5, ("a", "b"), _t_example5,
                     {"a": (lambda v: v > 0, "> 0"), "b": (lambda v: v > 0, "> 0")},
                     4, "example5",
                     "(1 - (log i/i)(a(1 + sin^2 sqrt(loglog i/log i)) + b sin(i pi/4)))^i"),
    "example6": _Def(1, ("a", "b"), _t_example6,
                     {"a": (lambda v: abs(v) <= ETA, f"|a| <= {ETA:g}"), "b": (_any, "real")},
                     1, "example6", "i^(b-3)/(a + |sin i|)"),
    "example7": _Def(1, ("a", "b"), _t_example7,
                     {"a": (_any, "real"), "b": (lambda v: v >= 1, ">= 1")}, 1, "example7",
                     "|sin(a pi i)|^i / i^b"),
    "alternating_unit": _Def(1, (), _t_alternating, {}, 1, "inverse_sqrt", "(-1)^(i-1)"),
    "mobius_dirichlet": _Def(1, ("a",), _t_mobius, {"a": (_any, "real")}, 1, "riemann",
                             "mu(i)/i^a"),
    "euler_zeta": _Def(1, ("a",), _t_zeta, {"a": (_any, "real")}, 1, "inverse_sqrt", "1/i^a"),
}

SERIES_IDS = tuple(_DEFS)


@dataclass(frozen=True)
class SeriesSpec:
    """A catalog series at fixed parameters.  Immutable and hashable."""

    id: str
    params: tuple = ()
    mobius: object = field(default=None, compare=False, repr=False)

    @property
    def theta(self) -> dict:
        return dict(self.params)

    @property
    def start_index(self) -> int:
        return _DEFS[self.id].start

    @property
    def default_bound(self) -> str:
        return _DEFS[self.id].bound

    def terms(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        if idx.size and idx.min() < self.start_index:
            raise DomainError(f"{self.id} starts at i={self.start_index}")
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return np.asarray(_DEFS[self.id].fn(idx, self.theta, self.mobius), dtype=np.float64)

    def term(self, i) -> float:
        return float(self.terms(np.array([i]))[0])


def make_series(series_id: str, mobius=None, **theta) -> SeriesSpec:
    if series_id not in _DEFS:
        raise DomainError(f"unknown series {series_id!r}; choose from {', '.join(SERIES_IDS)}")
    d = _DEFS[series_id]
    missing = [p for p in d.params if p not in theta]
    extra = [p for p in theta if p not in d.params]
    if missing or extra:
        raise DomainError(f"{series_id} takes parameters {d.params}, got {tuple(theta)}")
    for name, (ok, desc) in d.checks.items():
        v = float(theta[name])
        if not math.isfinite(v) or not ok(v):
            raise DomainError(f"{series_id}: parameter {name}={v!r} must be {desc}")
    params = tuple(sorted((k, float(v)) for k, v in theta.items()))
    return SeriesSpec(series_id, params, mobius)


def describe(series_id: str) -> dict:
    d = _DEFS[series_id]
    return {"id": series_id, "start_index": d.start, "params": list(d.params),
            "domain": {k: v[1] for k, v in d.checks.items()}, "bound": d.bound,
            "block_multiple": d.block_multiple, "term": d.summary}


def check_block_size(series_id: str, n: int) -> None:
    if n < 1:
        raise DomainError(f"block size must be positive, got {n}")
    m = _DEFS[series_id].block_multiple
    if n % m:
        raise DomainError(f"{series_id} needs a block size divisible by {m}, got {n}")


# bounds ----------------------------------------------------------------------

BOUND_IDS = ("example1", "example2", "example3", "example4", "example5", "example6",
             "example7", "riemann", "inverse_sqrt")


_REF_SERIES = {f"example{k}": f"example{k}" for k in range(2, 8)}
_REF_SERIES["riemann"] = "mobius_dirichlet"


@dataclass(frozen=True)
class BoundSpec:
    id: str
    eps: float = EPS

    def __post_init__(self):
        if self.id not in BOUND_IDS:
            raise DomainError(f"unknown bound {self.id!r}; choose from {', '.join(BOUND_IDS)}")

    @property
    def reference_series(self) -> str | None:
        return _REF_SERIES.get(self.id)

    def reference_params(self) -> dict | None:
        e = self.eps
        return {
            "example2": {"a": 1.0 + e},
            "example3": {"a": math.e + e},
            "example4": {"a": 1.0 + e, "b": 0.0},
            "example5": {"a": 1.0 + e, "b": e},
            "example6": {"a": e, "b": 2.0 - e},
            "example7": {"a": 1.0 / math.pi, "b": 1.0 + e},
            "riemann": {"a": 1.0},
        }.get(self.id)

    def reference(self, mobius=None) -> SeriesSpec | None:
        sid = self.reference_series
        if sid is None:
            return None
        return make_series(sid, mobius=mobius, **self.reference_params())


def _ref(ref, j):
    if ref is None:
        raise MissingReferenceError("bound needs reference block sums")
    try:
        v = ref[j - 1]
    except (IndexError, KeyError):
        raise MissingReferenceError(f"no reference block sum for stage {j}") from None
    return float(v)


def _positive_part(r: float, shift: float, j: int) -> float:
    u = r + shift / math.log(j + 1)
    return u if u > 0 else r


def bound(spec: BoundSpec, j: int, n: int, theta: Mapping[str, float] | None = None,
          ref: Sequence[float] | None = None) -> float:
    """c_j for stage j.  ``ref[j-1]`` is the reference block sum where one is needed."""
    if j < 1 or n < 1:
        raise DomainError(f"stage and block size must be positive (j={j}, n={n})")
    th = dict(theta or {})
    e = spec.eps
    bid = spec.id
    if bid in ("example1", "inverse_sqrt"):
        c = 1.0 / math.sqrt(n * j)
    elif bid == "example2":
        c = _positive_part(_ref(ref, j), th["a"] - 1.0 - ADJUST, j)
    elif bid == "example3":
        c = _positive_part(_ref(ref, j), th["a"] - math.e - ADJUST, j)
    elif bid in ("example4", "example5"):
        c = _positive_part(_ref(ref, j), th["a"] - 1.0 - th["b"] - ADJUST, j)
    elif bid == "example6":
        margin = SIN_MARGIN if th["b"] < 2 else -SIN_MARGIN
        c = _ref(ref, j) + (abs(th["a"]) - th["b"] + 2.0 - 2.0 * e + margin) / math.log(j + 1)
    elif bid == "example7":
        c = _ref(ref, j) + e / j
    elif bid == "riemann":
        c = abs(_ref(ref, j) + th["a"] / (j + 1))
    else:  # pragma: no cover - guarded by BoundSpec
        raise DomainError(bid)
    # y_j = [|S| <= c] cannot be 1 for c < 0 anyway; keep c in the documented range
    return max(c, 0.0)


def bounds(spec: BoundSpec, n: int, stages: int, theta=None, ref=None) -> np.ndarray:
    return np.array([bound(spec, j, n, theta, ref) for j in range(1, stages + 1)],
                    dtype=np.float64)


# reference block sums --------------------------------------------------------

_MEMO: dict = {}


def _cache_name(spec: SeriesSpec, n: int, K: int) -> str:
    par = "_".join(f"{k}={float(v).hex()}" for k, v in spec.params)
    return f"{spec.id}__{par}__n{n}__K{K}.npy"


def reference_block_sums(spec: SeriesSpec, n: int, K: int, cache_dir=None,
                         chunk: int = DEFAULT_CHUNK, workers: int = 1) -> np.ndarray:
    """S_j for j = 1..K of ``spec``, memoised and optionally stored as .npy.

    ``cache_dir`` defaults to the BAYES_SERIES_CACHE environment variable.
    """
    if K < 0:
        raise DomainError(f"stage count must be >= 0, got {K}")
    if K == 0:
        return np.zeros(0, dtype=np.float64)
    key = (spec, n, K)
    if key in _MEMO:
        return _MEMO[key].copy()
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    path = Path(cache_dir) / _cache_name(spec, n, K) if cache_dir else None
    if path is not None and path.exists():
        sums = np.load(path)
    else:
        sums = block_sums(spec, n, K, chunk, workers)
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".part.npy")
            np.save(tmp, sums)
            os.replace(tmp, path)
    _MEMO[key] = sums
    return sums.copy()


def clear_memo() -> None:
    _MEMO.clear()


def check_monotonicity(series_id: str, j: int, n: int, theta: Mapping[str, float],
                       theta2: Mapping[str, float]) -> tuple[float, float]:
    """Block sums (S^theta_j, S^theta2_j) for the two lemma families."""
    if series_id not in ("example4", "example5"):
        raise DomainError(f"monotonicity check is defined for example4/example5, not {series_id}")
    check_block_size(series_id, n)
    s1 = make_series(series_id, **theta)
    s2 = make_series(series_id, **theta2)
    plan = BlockPlan(s1.start_index, n, j)
    return chunked_parallel_sum(s1, plan), chunked_parallel_sum(s2, plan)
