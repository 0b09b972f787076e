"""Stage-wise Beta posterior for the probability that a series converges.

At stage j the block sum S_j is compared with a bound c_j; the indicator
y_j = [|S_j| <= c_j] is a Bernoulli draw.  With Beta(alpha_j, beta_j) priors
chained from stage to stage, the posterior after k stages is
Beta(sum alpha + sum y, k + sum beta - sum y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError

RECURSIVE = "recursive"
NON_RECURSIVE = "non_recursive"

CONVERGENT = "convergent"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

MEAN_HIGH = 0.9
MEAN_LOW = 0.1
WINDOW = 500
SLOPE_TOL = 1e-6

Schedule = Callable[[int], "tuple[float, float]"]


def inverse_square(j: int) -> tuple[float, float]:
    w = 1.0 / (j * j)
    return w, w


@dataclass(frozen=True)
class StageObservation:
    stage: int
    block_sum: float
    bound: float
    y: int


@dataclass(frozen=True)
class PosteriorState:
    k: int = 0
    sum_alpha: float = 0.0
    sum_beta: float = 0.0
    sum_y: int = 0
    mode: str = RECURSIVE
    # hyperparameters and indicator of the latest stage, for the
    # non-recursive posterior which forgets earlier stages
    last_alpha: float = 0.0
    last_beta: float = 0.0
    last_y: int = 0
    # Neumaier compensation for the two hyperparameter sums
    comp_alpha: float = 0.0
    comp_beta: float = 0.0

    def __post_init__(self):
        if self.mode not in (RECURSIVE, NON_RECURSIVE):
            raise DomainError(f"unknown posterior mode {self.mode!r}")

    @property
    def alpha_total(self) -> float:
        return self.sum_alpha + self.comp_alpha

    @property
    def beta_total(self) -> float:
        return self.sum_beta + self.comp_beta


def _add(total: float, comp: float, x: float) -> tuple[float, float]:
    t = total + x
    if abs(total) >= abs(x):
        comp += (total - t) + x
    else:
        comp += (x - t) + total
    return t, comp


def indicator(s: float, c: float) -> int:
    return 1 if abs(s) <= c else 0


def observe(state: PosteriorState, s: float, c: float,
            schedule: Schedule = inverse_square) -> tuple[PosteriorState, StageObservation]:
    """Fold one stage into the posterior."""
    if not (math.isfinite(s) and math.isfinite(c)):
        raise DomainError(f"non-finite block sum or bound (s={s!r}, c={c!r})")
    if c < 0:
        raise DomainError(f"bound must be nonnegative, got {c!r}")
    j = state.k + 1
    a, b = schedule(j)
    if not (a > 0 and b > 0):
        raise DomainError(f"schedule gave nonpositive hyperparameters at j={j}")
    y = indicator(s, c)
    sa, ca = _add(state.sum_alpha, state.comp_alpha, a)
    sb, cb = _add(state.sum_beta, state.comp_beta, b)
    new = PosteriorState(j, sa, sb, state.sum_y + y, state.mode, a, b, y, ca, cb)
    return new, StageObservation(j, float(s), float(c), y)


def observe_many(state: PosteriorState, block_sums: Iterable[float], bounds: Iterable[float],
                 schedule: Schedule = inverse_square) -> PosteriorState:
    """Fold many stages at once; same arithmetic as repeated :func:`observe`
    without the per-stage objects."""
    k, sy = state.k, state.sum_y
    sa, ca, sb, cb = state.sum_alpha, state.comp_alpha, state.sum_beta, state.comp_beta
    a = b = y = None
    isfinite = math.isfinite
    same = schedule is inverse_square and sa == sb and ca == cb
    for s, c in zip(block_sums, bounds):
        if not (isfinite(s) and isfinite(c)) or c < 0:
            raise DomainError(f"bad block sum or bound at stage {k + 1} (s={s!r}, c={c!r})")
        k += 1
        if same:
            a = b = 1.0 / (k * k)
        else:
            a, b = schedule(k)
            if not (a > 0 and b > 0):
                raise DomainError(f"schedule gave nonpositive hyperparameters at j={k}")
        y = 1 if abs(s) <= c else 0
        sy += y
        t = sa + a
        ca += (sa - t) + a if abs(sa) >= a else (a - t) + sa
        sa = t
        if not same:
            t = sb + b
            cb += (sb - t) + b if abs(sb) >= b else (b - t) + sb
            sb = t
    if a is None:
        return state
    if same:
        sb, cb = sa, ca
    return PosteriorState(k, sa, sb, sy, state.mode, a, b, y, ca, cb)


def _need_data(state: PosteriorState):
    if state.k < 1:
        raise DomainError("posterior moments need at least one stage")


def posterior_mean(state: PosteriorState) -> float:
    _need_data(state)
    if state.mode == NON_RECURSIVE:
        return posterior_mean_nonrecursive(state.k, state.last_y, state.last_alpha, state.last_beta)
    a = state.alpha_total
    return (a + state.sum_y) / (state.k + (a + state.beta_total))


def beta_variance(a: float, b: float) -> float:
    t = a + b
    return a * b / (t * t * (t + 1.0))


def posterior_variance(state: PosteriorState) -> float:
    _need_data(state)
    if state.mode == NON_RECURSIVE:
        return posterior_variance_nonrecursive(state.k, state.last_y, state.last_alpha,
                                               state.last_beta)
    # integer part first: k + beta - sum_y would cancel when most y are 1
    return beta_variance(state.alpha_total + state.sum_y,
                         (state.k - state.sum_y) + state.beta_total)


def _check_hyper(alpha_k, beta_k):
    if not (alpha_k > 0 and beta_k > 0):
        raise DomainError(f"hyperparameters must be positive, got ({alpha_k!r}, {beta_k!r})")


def posterior_mean_nonrecursive(k: int, y_k: int, alpha_k: float, beta_k: float) -> float:
    """Mean of Beta(alpha_k + y_k, beta_k + 1 - y_k): only stage k is used."""
    _check_hyper(alpha_k, beta_k)
    return (alpha_k + y_k) / (1.0 + alpha_k + beta_k)


def posterior_variance_nonrecursive(k: int, y_k: int, alpha_k: float, beta_k: float) -> float:
    _check_hyper(alpha_k, beta_k)
    return beta_variance(alpha_k + y_k, beta_k + 1 - y_k)


@dataclass(frozen=True)
class Verdict:
    label: str
    final_mean: float
    final_variance: float
    tail_slope: float

    def to_dict(self) -> dict:
        return {"label": self.label, "final_mean": self.final_mean,
                "tail_slope": self.tail_slope}


def tail_slope(means: Sequence[float], window: int) -> float:
    """Average per-stage change of the mean across the last ``window`` stages."""
    m = np.asarray(means, dtype=np.float64)
    return float((m[-1] - m[-window]) / (window - 1))


def classify(trace: Iterable, window: int = WINDOW, mean_high: float = MEAN_HIGH,
             mean_low: float = MEAN_LOW, slope_tol: float = SLOPE_TOL) -> Verdict:
    """Label a trace of (mean, variance) pairs.

    convergent: final mean >= mean_high and the tail is not falling.
    divergent: final mean <= mean_low, or the tail falls faster than slope_tol.
    """
    rows = np.asarray(list(trace), dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != 2:
        raise DomainError("trace must be a sequence of (mean, variance) pairs")
    if window < 2:
        raise DomainError(f"window must be at least 2, got {window}")
    if len(rows) < window:
        raise DomainError(f"trace of length {len(rows)} is shorter than window {window}")
    means = rows[:, 0]
    final, var = float(means[-1]), float(rows[-1, 1])
    slope = tail_slope(means, window)
    if final >= mean_high and slope >= 0:
        label = CONVERGENT
    elif final <= mean_low or slope < -slope_tol:
        label = DIVERGENT
    else:
        label = INCONCLUSIVE
    return Verdict(label, final, var, slope)


def run_posterior(block_sums: Sequence[float], bounds: Sequence[float],
                  schedule: Schedule = inverse_square, mode: str = RECURSIVE):
    """Feed paired block sums and bounds through :func:`observe`.

    Returns (final state, observations, list of (mean, variance)).
    """
    if len(block_sums) != len(bounds):
        raise DomainError("block sums and bounds differ in length")
    state = PosteriorState(mode=mode)
    obs, trace = [], []
    for s, c in zip(block_sums, bounds):
        state, o = observe(state, float(s), float(c), schedule)
        obs.append(o)
        trace.append((posterior_mean(state), posterior_variance(state)))
    return state, obs, trace
