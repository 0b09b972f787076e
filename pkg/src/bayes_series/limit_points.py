"""Limit points of a running sum by adaptive binning and Dirichlet posteriors.

Each new term moves the running sum S.  The value logistic(S)**rho lands in
one of M bins whose edges are the cumulative posterior means from the
previous stage; the bin counts then update a finite Dirichlet or a
(truncated) Dirichlet-process posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .summation import NeumaierSum

FINITE = "dirichlet_finite"
DP = "dirichlet_process"
UNIFORM = "uniform"
GEOMETRIC = "geometric"

MASS_FLOOR = 0.05
RATIO_HIGH = 0.9
RATIO_LOW = 0.1
BURN_IN = 1000

DIVERGES = "diverges_to_plus_inf"
CHECK = "needs_convergence_check"
SINGLE = "converged_single_point"
OSCILLATES = "oscillates"

EPS = 1e-10


def rho_from_policy(policy, theta=None, eps: float = EPS) -> float:
    """Resolve a power policy: a number, ``a-b+eps`` or ``a^6``."""
    th = dict(theta or {})
    if isinstance(policy, (int, float)):
        rho = float(policy)
    else:
        p = str(policy).replace(" ", "").lower()
        if p in ("a-b+eps", "a-b+e"):
            rho = max(th["a"] - th["b"] + eps, eps)
        elif p in ("a^6", "a**6"):
            rho = th["a"] ** 6
        else:
            try:
                rho = float(p)
            except ValueError:
                raise DomainError(f"unknown rho policy {policy!r}") from None
    if not (rho > 0 and math.isfinite(rho)):
        raise DomainError(f"rho must be positive and finite, got {rho!r}")
    return rho


def logistic_power(S: float, rho: float) -> float:
    """(e^S / (1 + e^S))**rho without overflow for large |S|."""
    if S >= 0:
        p = 1.0 / (1.0 + math.exp(-S))
    else:
        e = math.exp(S)
        p = e / (1.0 + e)
    return p ** rho


def assign_bin(S: float, rho: float, cumulative) -> int:
    """Smallest m (1-based) with logistic(S)**rho <= cumulative[m-1]; M if none."""
    v = logistic_power(S, rho)
    M = len(cumulative)
    for m in range(M - 1):
        if v <= cumulative[m]:
            return m + 1
    return M


@dataclass
class LimitPointState:
    M: int = 10
    mode: str = DP
    base: str | None = None
    rho: float = 2.0
    counts: list = field(default_factory=list)
    k: int = 0
    prior_scale: float = 0.0  # sum of 1/j^2 over j <= k
    running: NeumaierSum = field(default_factory=NeumaierSum)

    def __post_init__(self):
        if self.M < 2:
            raise DomainError(f"need at least 2 bins, got M={self.M}")
        if self.mode not in (FINITE, DP):
            raise DomainError(f"unknown mode {self.mode!r}")
        if self.base is None:
            self.base = UNIFORM if self.mode == FINITE else GEOMETRIC
        if self.base not in (UNIFORM, GEOMETRIC):
            raise DomainError(f"unknown base measure {self.base!r}")
        if self.mode == FINITE and self.base != UNIFORM:
            raise DomainError("the finite Dirichlet prior is symmetric; use base='uniform'")
        if not (self.rho > 0):
            raise DomainError(f"rho must be positive, got {self.rho!r}")
        if not self.counts:
            self.counts = [0] * self.M

    @property
    def running_sum(self) -> float:
        return self.running.value

    def weight(self, m: int) -> float:
        """Base measure of bin m (1-based)."""
        return 1.0 / self.M if self.base == UNIFORM else 2.0 ** -m

    def base_mass(self) -> float:
        return 1.0 if self.base == UNIFORM else 1.0 - 2.0 ** -self.M

    def _cum_weight(self, m: int) -> float:
        return m / self.M if self.base == UNIFORM else 1.0 - 2.0 ** -m

    def cumulative_thresholds(self) -> list:
        """Cumulative posterior means of bins 1..M at the current stage.

        Before any data the first-stage prior is used (prior scale 1).
        """
        s = self.prior_scale if self.k else 1.0
        k = self.k
        out, cc = [], 0
        if self.mode == FINITE:
            norm = self.M * s + k
            for m in range(1, self.M + 1):
                cc += self.counts[m - 1]
                out.append((m * s + cc) / norm)
        else:
            norm = s + k
            for m in range(1, self.M + 1):
                cc += self.counts[m - 1]
                out.append((self._cum_weight(m) * s + cc) / norm)
        return out

    def update(self, x: float) -> int:
        """Add one term; returns the bin it was assigned to."""
        x = float(x)
        if not math.isfinite(x):
            raise DomainError(f"non-finite term {x!r} at k={self.k + 1}")
        cum = self.cumulative_thresholds()
        self.running.add(x)
        m = assign_bin(self.running.value, self.rho, cum)
        self.counts[m - 1] += 1
        self.k += 1
        self.prior_scale += 1.0 / (self.k * self.k)
        return m

    def posterior_mean_var(self, m: int) -> tuple[float, float]:
        if not 1 <= m <= self.M:
            raise DomainError(f"bin {m} outside 1..{self.M}")
        if self.k < 1:
            raise DomainError("posterior moments need k >= 1")
        return posterior_mean_var(self.mode, self.M, self.k, self.prior_scale,
                                  self.counts[m - 1], self.weight(m))

    def means(self) -> list:
        return [self.posterior_mean_var(m)[0] for m in range(1, self.M + 1)]


def posterior_mean_var(mode: str, M: int, k: int, s: float, c: int,
                       g: float | None = None) -> tuple[float, float]:
    """Posterior mean and variance of bin probability p_m.

    finite: Dirichlet(s + c_1, ..., s + c_M) marginal.
    dp: base weight g, total prior scale s.
    """
    if mode == FINITE:
        t = M * s + k
        a = s + c
        return a / t, a * ((M - 1) * s + k - c) / (t * t * (t + 1.0))
    if mode == DP:
        if g is None:
            raise DomainError("dp mode needs the base weight g")
        t = s + k
        # the variance numerator is kept in the published form, whose first
        # factor carries the full prior scale s rather than g*s
        return (g * s + c) / t, (s + c) * ((1.0 - g) * s + k - c) / (t * t * (t + 1.0))
    raise DomainError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class LimitPointReport:
    label: str
    k: int
    M: int
    dominant_bin: int
    ratio: float
    L: int
    bins: tuple
    proportions: tuple
    means: tuple

    def to_dict(self) -> dict:
        return {"label": self.label, "k": self.k, "M": self.M,
                "dominant_bin": self.dominant_bin, "ratio": self.ratio, "L": self.L,
                "bins": list(self.bins), "proportions": list(self.proportions),
                "means": list(self.means)}


def classify_limit_points(state: LimitPointState, mass_floor: float = MASS_FLOOR,
                          high: float = RATIO_HIGH, low: float = RATIO_LOW,
                          burn_in: int = BURN_IN) -> LimitPointReport:
    """Apply the bin-ratio rule of thumb to the final posterior means.

    Two or more bins with mean >= mass_floor mean oscillation between that
    many limit points.  Otherwise the heaviest bin m decides: m/M > high is
    divergence to +inf, low < m/M <= high a single finite limit, and
    m/M <= low is left to the convergence engine.
    """
    if state.k < burn_in:
        raise DomainError(f"classification needs k >= {burn_in}, have {state.k}")
    means = state.means()
    heavy = [m for m in range(1, state.M + 1) if means[m - 1] >= mass_floor]
    top = int(np.argmax(means)) + 1
    ratio = top / state.M
    if len(heavy) >= 2:
        label = OSCILLATES
    elif ratio > high:
        label = DIVERGES
    elif ratio > low:
        label = SINGLE
    else:
        label = CHECK
    return LimitPointReport(label, state.k, state.M, top, ratio, max(len(heavy), 1),
                            tuple(heavy), tuple(means[m - 1] for m in heavy), tuple(means))


def iterate(state: LimitPointState, series, stages: int, chunk: int = 1 << 14):
    """Feed ``stages`` consecutive terms of ``series``; yields (k, S, bin)."""
    i0 = series.start_index
    done = 0
    while done < stages:
        n = min(chunk, stages - done)
        xs = series.terms(np.arange(i0 + done, i0 + done + n, dtype=np.int64))
        for x in xs.tolist():
            m = state.update(x)
            yield state.k, state.running.value, m
        done += n


def run_limits(series, stages: int, M: int = 10, rho: float = 2.0, mode: str = DP,
               base: str | None = None) -> LimitPointState:
    state = LimitPointState(M=M, mode=mode, base=base, rho=rho)
    for _ in iterate(state, series, stages):
        pass
    return state
