"""Bayesian assessment of convergence, divergence and limit points of series."""

from .catalog import BoundSpec, SeriesSpec, bound, make_series, reference_block_sums
from .errors import (BayesSeriesError, DomainError, MissingReferenceError, NonFiniteTermError,
                     PrecisionLossError)
from .posterior import (PosteriorState, Verdict, classify, observe, observe_many, posterior_mean,
                        posterior_variance)
from .summation import BlockPlan, block_sum, chunked_parallel_sum

__version__ = "0.1.0"

__all__ = [
    "BayesSeriesError", "BlockPlan", "BoundSpec", "DomainError", "MissingReferenceError",
    "NonFiniteTermError", "PosteriorState", "PrecisionLossError", "SeriesSpec", "Verdict",
    "block_sum", "bound", "chunked_parallel_sum", "classify", "make_series", "observe",
    "observe_many", "posterior_mean", "posterior_variance", "reference_block_sums",
]
