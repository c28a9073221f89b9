"""scikit-learn style wrappers around the functional API.

The transformers are stateless (``fit`` only validates), so they can sit in a
``Pipeline`` ahead of any downstream estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import metrics
from ._validation import check_degrees, check_values
from .exceptions import VGError
from .powerlaw import (
    ALPHA_RANGE,
    MIN_TAIL_SIZE,
    bootstrap_gof,
    fit_at_kmin,
    fitted_ccdf,
    hurwitz_zeta,
    select_kmin,
)
from .series import PriceSeries
from .vg import TIME_MODES, VisibilityGraph, build_fast, build_naive

FEATURES = ("k_min", "k_mean", "k_max", "c_min", "c_mean", "c_max", "r")


def _as_series_list(X):
    if isinstance(X, PriceSeries):
        return [X]
    if isinstance(X, np.ndarray) and X.ndim == 1:
        return [check_values(X)]
    if isinstance(X, np.ndarray) and X.ndim == 2:
        return [check_values(row) for row in X]
    return [x if isinstance(x, PriceSeries) else check_values(x) for x in X]


class VisibilityGraphTransformer(TransformerMixin, BaseEstimator):
    """Map each series (row of ``X``, or item of a list) to its visibility graph.

    Parameters
    ----------
    time_mode : {"ordinal", "actual"}
        Abscissa of the visibility test. ``"actual"`` needs :class:`PriceSeries` input.
    method : {"fast", "naive"}
    """

    def __init__(self, time_mode="ordinal", method="fast"):
        self.time_mode = time_mode
        self.method = method

    def fit(self, X, y=None):
        if self.time_mode not in TIME_MODES:
            raise ValueError(f"time_mode must be one of {TIME_MODES}")
        if self.method not in ("fast", "naive"):
            raise ValueError("method must be 'fast' or 'naive'")
        _as_series_list(X)
        self.n_series_ = len(_as_series_list(X))
        return self

    def transform(self, X) -> list[VisibilityGraph]:
        check_is_fitted(self, "n_series_")
        build = build_fast if self.method == "fast" else build_naive
        return [build(s, time_mode=self.time_mode) for s in _as_series_list(X)]


class VisibilityGraphFeatures(TransformerMixin, BaseEstimator):
    """Summary network features per series, ready for a downstream model.

    Columns follow :data:`FEATURES`. Undefined values (no node with degree >= 2,
    or a degenerate assortativity) are NaN.
    """

    def __init__(self, time_mode="ordinal"):
        self.time_mode = time_mode

    def fit(self, X, y=None):
        self.n_features_out_ = len(FEATURES)
        _as_series_list(X)
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_out_")
        rows = []
        for s in _as_series_list(X):
            g = build_fast(s, time_mode=self.time_mode)
            d = metrics.degree_distribution(g)
            c = metrics.clustering(g)
            r = metrics.mixing_profile(g).assortativity_r
            rows.append([d.k_min_obs, d.k_mean, d.k_max, c.c_min, c.global_mean, c.c_max,
                         np.nan if r is None else r])
        return np.asarray(rows, dtype=np.float64)

    def get_feature_names_out(self, input_features=None):
        return np.asarray(FEATURES, dtype=object)


class DiscretePowerLaw(BaseEstimator):
    """Discrete power-law tail estimator.

    ``fit`` accepts a degree sequence or a :class:`VisibilityGraph`. With
    ``k_min=None`` the lower bound is chosen by KS minimisation.

    Attributes
    ----------
    alpha_, beta_, k_min_, ks_distance_, n_tail_ : fitted tail parameters
    gof_p_value_ : bootstrap p-value, or None when ``n_bootstrap == 0``
    fit_ : the underlying :class:`~vgnet.powerlaw.PowerLawFit`
    """

    def __init__(self, k_min=None, min_tail_size=MIN_TAIL_SIZE, alpha_range=ALPHA_RANGE,
                 n_bootstrap=0, random_state=None):
        self.k_min = k_min
        self.min_tail_size = min_tail_size
        self.alpha_range = alpha_range
        self.n_bootstrap = n_bootstrap
        self.random_state = random_state

    @staticmethod
    def _degrees(X):
        if isinstance(X, VisibilityGraph):
            return X.degrees()
        return check_degrees(np.ravel(np.asarray(X)))

    def fit(self, X, y=None):
        deg = self._degrees(X)
        if self.k_min is None:
            fit = select_kmin(deg, self.min_tail_size, tuple(self.alpha_range))
        else:
            fit = fit_at_kmin(deg, self.k_min, self.min_tail_size, tuple(self.alpha_range))
        p = None
        if self.n_bootstrap:
            seed = self.random_state if not isinstance(self.random_state, np.random.Generator) \
                else int(self.random_state.integers(2**63))
            p = bootstrap_gof(fit, deg, self.n_bootstrap, seed, min_tail_size=self.min_tail_size)
        self.fit_ = fit
        self.alpha_ = fit.alpha
        self.beta_ = fit.beta
        self.k_min_ = fit.k_min
        self.ks_distance_ = fit.ks_distance
        self.n_tail_ = fit.n_tail
        self.gof_p_value_ = p
        return self

    def ccdf(self, k):
        check_is_fitted(self, "fit_")
        return fitted_ccdf(self.fit_, k)

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per tail observation of ``X`` under the fitted model."""
        check_is_fitted(self, "fit_")
        deg = self._degrees(X)
        tail = deg[deg >= self.k_min_]
        if not len(tail):
            raise VGError("no observations at or above k_min")
        return float(-np.log(hurwitz_zeta(self.alpha_, self.k_min_))
                     - self.alpha_ * np.log(tail).mean())
