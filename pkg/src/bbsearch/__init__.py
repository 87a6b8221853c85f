"""Bayesian binary search: probe at the median of a prior truncated to the bracket."""

from bbsearch.density import (
    KDE,
    Exponential,
    GaussianMixture,
    Histogram,
    KlShiftSpec,
    Normal,
    TruncatedDensity,
    Uniform,
    fit_kde,
    fit_mle,
    kl_normal,
    kl_shifted_normal,
)
from bbsearch.search import SearchOutcome, SignOracle, bbs_search, classic_search, find_median

__version__ = "0.1.0"
