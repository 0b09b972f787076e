"""Wiring of series, bounds and engines into complete analyses."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import limit_points as lp
from .catalog import (EPS, BoundSpec, SeriesSpec, check_block_size, make_series,
                      reference_block_sums, bounds as bound_sequence)
from .errors import DomainError, TableRangeError
from .mobius import MobiusTable
from .posterior import (MEAN_HIGH, MEAN_LOW, SLOPE_TOL, WINDOW, CONVERGENT, Verdict, classify,
                        run_posterior)
from .summation import DEFAULT_CHUNK, block_sums

PRESETS = {
    "full": {"n": 10**6, "stages": 10**5},
    "riemann": {"n": 10**6, "stages": 1000},
    "limits": {"M": 10, "stages": 10**5},
}


@dataclass
class AnalysisConfig:
    series: str = ""
    theta: dict = field(default_factory=dict)
    n: int = 10**6
    stages: int = 10**5
    bound: str | None = None
    eps: float = EPS
    engine: str = "convergence"
    # limit-point engine
    M: int = 10
    rho: str = "2"
    lp_mode: str = lp.DP
    base: str | None = lp.UNIFORM
    # verdict
    window: int = WINDOW
    mean_high: float = MEAN_HIGH
    mean_low: float = MEAN_LOW
    slope_tol: float = SLOPE_TOL
    # plumbing
    chunk: int = DEFAULT_CHUNK
    workers: int = 1
    mobius_table: str | None = None
    out: str | None = None
    cache_dir: str | None = None

    @classmethod
    def from_mapping(cls, data: dict) -> "AnalysisConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise DomainError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def updated(self, **changes) -> "AnalysisConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def validate(self) -> "AnalysisConfig":
        if self.stages < 1:
            raise DomainError(f"stage count must be >= 1, got {self.stages}")
        if self.engine == "convergence":
            if self.stages < 2:
                raise DomainError("the convergence verdict needs at least 2 stages")
            check_block_size(self.series, self.n)
        elif self.engine != "limits":
            raise DomainError(f"unknown engine {self.engine!r}")
        make_series(self.series, **self.theta)
        if self.bound is not None:
            BoundSpec(self.bound, self.eps)
        if self.M < 2:
            raise DomainError(f"M must be >= 2, got {self.M}")
        if self.chunk < 1 or self.workers < 1:
            raise DomainError("chunk and workers must be positive")
        return self


@dataclass
class ConvergenceResult:
    config: AnalysisConfig
    block_sums: np.ndarray
    bounds: np.ndarray
    y: list
    trace: list  # (mean, variance) per stage
    verdict: Verdict

    def rows(self):
        for j, (s, c, y, (m, v)) in enumerate(zip(self.block_sums, self.bounds, self.y,
                                                  self.trace), start=1):
            yield j, float(s), float(c), y, m, v


def _series(cfg: AnalysisConfig, table: MobiusTable | None) -> SeriesSpec:
    return make_series(cfg.series, mobius=table, **cfg.theta)


def _check_cover(series: SeriesSpec, last_index: int, table: MobiusTable | None):
    if table is not None and series.id == "mobius_dirichlet" and last_index > table.N:
        raise TableRangeError(
            f"table covers n <= {table.N} but the analysis needs n <= {last_index}")


def run_convergence(cfg: AnalysisConfig, table: MobiusTable | None = None) -> ConvergenceResult:
    cfg.validate()
    series = _series(cfg, table)
    spec = BoundSpec(cfg.bound or series.default_bound, cfg.eps)
    n, K = cfg.n, cfg.stages
    _check_cover(series, series.start_index + n * K - 1, table)
    ref = None
    ref_series = spec.reference(table)
    if ref_series is not None:
        _check_cover(ref_series, ref_series.start_index + n * K - 1, table)
        ref = reference_block_sums(ref_series, n, K, cfg.cache_dir, cfg.chunk, cfg.workers)
    sums = block_sums(series, n, K, cfg.chunk, cfg.workers)
    cs = bound_sequence(spec, n, K, series.theta, ref)
    _, obs, trace = run_posterior(sums, cs)
    verdict = classify(trace, min(cfg.window, K), cfg.mean_high, cfg.mean_low, cfg.slope_tol)
    return ConvergenceResult(cfg, sums, cs, [o.y for o in obs], trace, verdict)


@dataclass
class SweepPoint:
    value: float
    verdict: Verdict


def run_sweep(cfg: AnalysisConfig, param: str, grid, table: MobiusTable | None = None):
    """Verdict at every grid value of ``param``; returns (points, smallest convergent)."""
    grid = list(grid)
    if not grid:
        raise DomainError("sweep grid is empty")
    pts = []
    for v in grid:
        th = dict(cfg.theta)
        th[param] = float(v)
        res = run_convergence(replace(cfg, theta=th), table)
        pts.append(SweepPoint(float(v), res.verdict))
    conv = [p.value for p in pts if p.verdict.label == CONVERGENT]
    return pts, (min(conv) if conv else None)


@dataclass
class LimitsResult:
    config: AnalysisConfig
    state: lp.LimitPointState
    report: lp.LimitPointReport | None
    rows: list


def run_limits(cfg: AnalysisConfig, table: MobiusTable | None = None, trace: bool = True,
               burn_in: int = lp.BURN_IN) -> LimitsResult:
    cfg = replace(cfg, engine="limits").validate()
    series = _series(cfg, table)
    _check_cover(series, series.start_index + cfg.stages - 1, table)
    rho = lp.rho_from_policy(cfg.rho, series.theta, cfg.eps)
    state = lp.LimitPointState(M=cfg.M, mode=cfg.lp_mode, base=cfg.base, rho=rho)
    rows = []
    for k, s, m in lp.iterate(state, series, cfg.stages):
        if trace:
            rows.append((k, s, m, *state.means()))
    report = lp.classify_limit_points(state, burn_in=burn_in) if state.k >= burn_in else None
    return LimitsResult(cfg, state, report, rows)
