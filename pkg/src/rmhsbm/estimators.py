"""scikit-learn style wrappers.

``X`` is a population: a sequence of :class:`GraphSample` or
:class:`BlockSummary` objects (one row per graph).  There is no target.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .estimation import aggregate_summaries, bic_delta, llr_report
from .hierarchy import build_parameter_groups, resolve_spec
from .testing import METHODS, DEFAULT_RATE_THRESHOLD, run_tests, wilks_global
from .validation import check_alpha, check_population


class GroupLLRTransformer(TransformerMixin, BaseEstimator):
    """Maps each graph to its per-group -2 log LR statistics (n_graphs x n_groups)."""

    def __init__(self, spec="bnu1_desk"):
        self.spec = spec

    def fit(self, X=None, y=None):
        spec = resolve_spec(self.spec)
        self.groups_ = build_parameter_groups(spec)
        self.n_features_out_ = len(self.groups_)
        return self

    def transform(self, X):
        check_is_fitted(self, "groups_")
        population = check_population(X, self.groups_.k_star)
        return np.vstack([llr_report(s, self.groups_).statistics for s in population])


class MotifStructureTest(BaseEstimator):
    """Test a population for the repeated-motif structure of ``spec``.

    After ``fit`` the estimator holds the per-group report (``report_``), the
    global chi-square outcome and the BIC comparison of the pooled counts.
    """

    def __init__(self, spec="bnu1_desk", method="wilks-aggregated", alpha=0.05, rate_threshold=DEFAULT_RATE_THRESHOLD):
        self.spec = spec
        self.method = method
        self.alpha = alpha
        self.rate_threshold = rate_threshold

    def fit(self, X, y=None):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        alpha = check_alpha(self.alpha)
        spec = resolve_spec(self.spec)
        self.groups_ = build_parameter_groups(spec)
        population = check_population(X, spec.k_star)
        pooled = aggregate_summaries(population)
        self.report_ = run_tests(population, self.groups_, self.method, alpha, self.rate_threshold)
        self.global_ = wilks_global(pooled, self.groups_, alpha)
        self.bic_ = bic_delta(pooled, self.groups_)
        self.n_graphs_ = len(population)
        return self

    @property
    def rejection_matrix_(self):
        check_is_fitted(self, "report_")
        return self.report_.rejection_matrix

