"""Discrete power-law tail fitting.

The tail model is ``p(k) = k**-alpha / zeta(alpha, k_min)`` for integer
``k >= k_min``. ``alpha`` is the maximum-likelihood estimate for a given
``k_min``; ``k_min`` itself is the candidate minimising the Kolmogorov-Smirnov
distance between the empirical and fitted tail CDFs. A semiparametric
bootstrap gives a goodness-of-fit p-value.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from numba import njit

from ._validation import check_degrees, seed_children
from .exceptions import DomainError, NoMaximumInRange, PreconditionFailed, TailTooSmall

__all__ = [
    "ALPHA_RANGE",
    "MIN_TAIL_SIZE",
    "PowerLawFit",
    "bootstrap_gof",
    "fit_alpha",
    "fitted_ccdf",
    "hurwitz_zeta",
    "pmf",
    "sample_discrete_power_law",
    "select_kmin",
]

MIN_TAIL_SIZE = 50
ALPHA_RANGE = (1.01, 6.0)
ALPHA_TOL = 1e-6
# Direct summation continues until the shifted argument reaches this value;
# the Euler-Maclaurin remainder after the B4 term is then below 1e-14.
_EM_SHIFT = 100.0
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_TABLE_CAP = 1 << 20
_TABLE_TAIL = 1e-12


# -- Hurwitz zeta ------------------------------------------------------------


@njit(cache=True, nogil=True)
def _hz(s, q):
    n_direct = 0
    if q < _EM_SHIFT:
        n_direct = int(math.ceil(_EM_SHIFT - q))
    a = q + n_direct
    tail = (
        a ** (1.0 - s) / (s - 1.0)
        + 0.5 * a ** (-s)
        + s * a ** (-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a ** (-s - 3.0) / 720.0
    )
    acc = 0.0
    for m in range(n_direct - 1, -1, -1):
        acc += (q + m) ** (-s)
    return acc + tail


@njit(cache=True, nogil=True)
def _hz_vec(s, q):
    out = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        out[i] = _hz(s, q[i])
    return out


def hurwitz_zeta(alpha, q):
    """Hurwitz zeta ``sum_{m>=0} (q + m)**-alpha`` for ``alpha > 1``, ``q > 0``.

    Terms are summed directly until ``q + m`` reaches 100 and the remainder is
    taken from the Euler-Maclaurin formula through the B4 Bernoulli term.
    ``q`` may be a scalar or an array.
    """
    alpha = float(alpha)
    if not alpha > 1.0:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    arr = np.asarray(q, dtype=np.float64)
    if arr.size and not np.all(arr > 0):
        raise DomainError("q must be positive")
    if arr.ndim == 0:
        return float(_hz(alpha, float(arr)))
    return _hz_vec(alpha, np.ascontiguousarray(arr.ravel())).reshape(arr.shape)


# -- maximum likelihood ------------------------------------------------------


@njit(cache=True, nogil=True)
def _loglik(alpha, n_tail, k_min, sum_log):
    return -n_tail * math.log(_hz(alpha, k_min)) - alpha * sum_log


@njit(cache=True, nogil=True)
def _golden_max(n_tail, k_min, sum_log, lo, hi, tol):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _loglik(c, n_tail, k_min, sum_log)
    fd = _loglik(d, n_tail, k_min, sum_log)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = _loglik(c, n_tail, k_min, sum_log)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = _loglik(d, n_tail, k_min, sum_log)
    x = 0.5 * (a + b)
    return x, _loglik(x, n_tail, k_min, sum_log)


def _at_boundary(alpha, lo, hi, tol):
    return alpha - lo <= 2 * tol or hi - alpha <= 2 * tol


def fit_alpha(degrees, k_min: int, min_tail_size: int = MIN_TAIL_SIZE,
              alpha_range=ALPHA_RANGE, tol: float = ALPHA_TOL) -> tuple[float, float]:
    """Maximum-likelihood exponent of the tail ``degrees >= k_min``.

    Maximises ``-n ln zeta(alpha, k_min) - alpha sum ln k`` by golden-section
    search over ``alpha_range``. Returns ``(alpha, log_likelihood)``.
    Raises :class:`NoMaximumInRange` when the optimum sits on a search bound.
    """
    k_min = int(k_min)
    if k_min < 1:
        raise DomainError("k_min must be at least 1")
    deg = check_degrees(degrees)
    tail = deg[deg >= k_min]
    if len(tail) < min_tail_size:
        raise TailTooSmall(f"{len(tail)} observations >= {k_min}, need {min_tail_size}")
    lo, hi = alpha_range
    alpha, ll = _golden_max(float(len(tail)), float(k_min), float(np.log(tail).sum()), lo, hi, tol)
    if _at_boundary(alpha, lo, hi, tol):
        raise NoMaximumInRange(f"likelihood maximum at search bound (alpha={alpha:.6f})")
    return float(alpha), float(ll)


# -- k_min selection ---------------------------------------------------------


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    k_min: int
    ks_distance: float
    n_tail: int
    n_total: int
    log_likelihood: float
    gof_p_value: float | None = None

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise DomainError("alpha must exceed 1")
        if self.k_min < 1:
            raise DomainError("k_min must be at least 1")

    @property
    def beta(self) -> float:
        """Exponent of the CCDF, ``alpha - 1``."""
        return self.alpha - 1.0

    def to_dict(self) -> dict:
        out = {
            "alpha": self.alpha,
            "beta": self.beta,
            "k_min": self.k_min,
            "ks_distance": self.ks_distance,
            "n_tail": self.n_tail,
        }
        if self.gof_p_value is not None:
            out["gof_p_value"] = self.gof_p_value
        return out


@njit(cache=True, nogil=True)
def _ks(alpha, k_min, values, cum_counts, start, n_tail):
    """Sup distance between empirical and fitted CDFs at the observed tail values."""
    z0 = _hz(alpha, k_min)
    base = cum_counts[start - 1] if start > 0 else 0
    d = 0.0
    for i in range(start, values.shape[0]):
        emp = (cum_counts[i] - base) / n_tail
        fit = 1.0 - _hz(alpha, values[i] + 1.0) / z0
        diff = abs(emp - fit)
        if diff > d:
            d = diff
    return d


@njit(cache=True, nogil=True)
def _scan(values, counts, log_values, min_tail, lo, hi, tol):
    n_vals = values.shape[0]
    cum_counts = np.cumsum(counts)
    total = cum_counts[-1]
    # suffix sums of (count * ln k)
    suffix_log = np.zeros(n_vals + 1)
    for i in range(n_vals - 1, -1, -1):
        suffix_log[i] = suffix_log[i + 1] + counts[i] * log_values[i]
    best = (-1, 0.0, 0.0, 0.0, 0)  # index, alpha, ks, loglik, n_tail
    best_ks = np.inf
    boundary_hits = 0
    for i in range(n_vals):
        if values[i] < 1.0:
            continue
        n_tail = total - (cum_counts[i - 1] if i > 0 else 0)
        if n_tail < min_tail:
            break
        alpha, ll = _golden_max(float(n_tail), values[i], suffix_log[i], lo, hi, tol)
        if alpha - lo <= 2 * tol or hi - alpha <= 2 * tol:
            boundary_hits += 1
            continue
        d = _ks(alpha, values[i], values, cum_counts, i, float(n_tail))
        if d < best_ks:
            best_ks = d
            best = (i, alpha, d, ll, n_tail)
    return best, boundary_hits


def select_kmin(degrees, min_tail_size: int = MIN_TAIL_SIZE, alpha_range=ALPHA_RANGE,
                tol: float = ALPHA_TOL) -> PowerLawFit:
    """Scan every observed value as ``k_min`` and keep the fit with the smallest KS distance.

    Candidates with fewer than ``min_tail_size`` tail observations are not
    considered; ties go to the smaller ``k_min``. Candidates whose likelihood
    peaks on a search bound are skipped.
    """
    deg = check_degrees(degrees)
    values, counts = np.unique(deg, return_counts=True)
    positive = values >= 1
    if int(counts[positive].sum()) < min_tail_size or positive.sum() == 0:
        raise TailTooSmall(f"fewer than {min_tail_size} positive observations")
    if positive.sum() < 2:
        raise TailTooSmall("tail has a single distinct value; no exponent can be fitted")
    v = values.astype(np.float64)
    logs = np.log(np.where(v >= 1, v, 1.0))
    lo, hi = alpha_range
    (idx, alpha, ks, ll, n_tail), hits = _scan(
        v, counts.astype(np.int64), logs, min_tail_size, lo, hi, tol
    )
    if idx < 0:
        if hits:
            raise NoMaximumInRange("every candidate k_min put the likelihood maximum on a bound")
        raise TailTooSmall(f"no candidate k_min leaves {min_tail_size} tail observations")
    return PowerLawFit(
        alpha=float(alpha),
        k_min=int(values[idx]),
        ks_distance=float(ks),
        n_tail=int(n_tail),
        n_total=int(len(deg)),
        log_likelihood=float(ll),
    )


def fit_at_kmin(degrees, k_min: int, min_tail_size: int = MIN_TAIL_SIZE,
                alpha_range=ALPHA_RANGE, tol: float = ALPHA_TOL) -> PowerLawFit:
    """Fit with a fixed ``k_min`` and report its KS distance."""
    deg = check_degrees(degrees)
    alpha, ll = fit_alpha(deg, k_min, min_tail_size, alpha_range, tol)
    values, counts = np.unique(deg, return_counts=True)
    start = int(np.searchsorted(values, k_min))
    n_tail = int(counts[start:].sum())
    ks = _ks(alpha, float(k_min), values.astype(np.float64), np.cumsum(counts), start, float(n_tail))
    return PowerLawFit(alpha, int(k_min), float(ks), n_tail, int(len(deg)), ll)


# -- fitted curves -----------------------------------------------------------


def fitted_ccdf(fit: PowerLawFit, k):
    """``Pr(K >= k) = zeta(alpha, k) / zeta(alpha, k_min)`` for ``k >= k_min``."""
    arr = np.asarray(k)
    if arr.size and np.any(arr < fit.k_min):
        raise DomainError(f"k must be at least k_min={fit.k_min}")
    return hurwitz_zeta(fit.alpha, arr) / hurwitz_zeta(fit.alpha, fit.k_min)


def pmf(fit: PowerLawFit, k):
    arr = np.asarray(k, dtype=np.float64)
    if arr.size and np.any(arr < fit.k_min):
        raise DomainError(f"k must be at least k_min={fit.k_min}")
    return arr ** (-fit.alpha) / hurwitz_zeta(fit.alpha, fit.k_min)


def curves_csv(fit: PowerLawFit, support) -> tuple[str, str]:
    """Two-column ``k,ccdf`` texts: empirical CCDF of ``support`` and the fitted tail.

    The fitted curve is scaled by ``n_tail / n_total`` so it overlays the
    empirical curve of the whole sample.
    """
    deg = check_degrees(support)
    values, counts = np.unique(deg, return_counts=True)
    emp = np.cumsum(counts[::-1])[::-1] / len(deg)
    tail_vals = values[values >= fit.k_min]
    fitted = fitted_ccdf(fit, tail_vals) * (fit.n_tail / fit.n_total)
    empirical = io.StringIO()
    empirical.write("k,ccdf\n")
    for k, c in zip(values.tolist(), emp.tolist()):
        empirical.write(f"{k},{c!r}\n")
    model = io.StringIO()
    model.write("k,ccdf\n")
    for k, c in zip(tail_vals.tolist(), np.atleast_1d(fitted).tolist()):
        model.write(f"{k},{c!r}\n")
    return empirical.getvalue(), model.getvalue()


# -- sampling and bootstrap --------------------------------------------------


@lru_cache(maxsize=16)
def _ccdf_table(alpha, k_min):
    """``Pr(K >= k)`` for ``k = k_min, ...`` until the tail mass drops below 1e-12.

    Cached because every bootstrap resample of a fit draws from the same model.
    """
    z0 = _hz(alpha, float(k_min))
    size = 1024
    while True:
        ks = np.arange(k_min, k_min + size, dtype=np.float64)
        table = _hz_vec(alpha, ks) / z0
        if table[-1] < _TABLE_TAIL or size >= _TABLE_CAP:
            table.flags.writeable = False
            return table, z0
        size *= 4


def sample_discrete_power_law(alpha: float, k_min: int, size: int, rng=None) -> np.ndarray:
    """Exact inverse-CDF draws from ``k**-alpha / zeta(alpha, k_min)``.

    A cumulative table covers ``k`` until the remaining mass is below 1e-12
    (capped at 2**20 entries); draws falling past the table are located by
    bisection on the Hurwitz-zeta CCDF, so no continuous approximation is used.
    """
    if not alpha > 1.0:
        raise DomainError("alpha must exceed 1")
    rng = np.random.default_rng(rng)
    k_min = int(k_min)
    table, z0 = _ccdf_table(float(alpha), k_min)
    v = 1.0 - rng.random(int(size))  # in (0, 1]
    # X = largest k with Pr(K >= k) >= v
    cnt = np.searchsorted(-table, -v, side="right")
    out = (k_min + cnt - 1).astype(np.int64)
    for idx in np.flatnonzero(cnt == len(table)):
        target = v[idx]
        lo = k_min + len(table) - 1
        hi = 2 * lo
        while _hz(alpha, float(hi)) / z0 >= target:
            lo, hi = hi, 2 * hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _hz(alpha, float(mid)) / z0 >= target:
                lo = mid
            else:
                hi = mid
        out[idx] = lo
    return out


def _bootstrap_one(child, n, fit, body, select_kwargs):
    rng = np.random.default_rng(child)
    n_tail = rng.binomial(n, fit.n_tail / n) if len(body) else n
    synthetic = np.concatenate([
        sample_discrete_power_law(fit.alpha, fit.k_min, n_tail, rng),
        rng.choice(body, size=n - n_tail) if n - n_tail else np.zeros(0, dtype=np.int64),
    ])
    try:
        return select_kmin(synthetic, **select_kwargs).ks_distance
    except (TailTooSmall, NoMaximumInRange):
        return None


def bootstrap_gof(fit: PowerLawFit, degrees, n_resamples: int = 1000, seed=None,
                  n_jobs: int | None = None, min_tail_size: int = MIN_TAIL_SIZE) -> float:
    """Semiparametric bootstrap p-value for a fitted tail.

    Each synthetic sample keeps the empirical body below ``k_min`` and draws the
    tail from the fitted model, with the tail share drawn binomially. The
    sample is refitted from scratch and the p-value is the fraction of valid
    refits whose KS distance exceeds the observed one. Resample ``r`` uses the
    ``r``-th child of ``SeedSequence(seed)``, so the result does not depend on
    ``n_jobs``.
    """
    if n_resamples < 100:
        raise PreconditionFailed("bootstrap needs at least 100 resamples")
    deg = check_degrees(degrees)
    if int((deg >= fit.k_min).sum()) < min_tail_size:
        raise TailTooSmall("the supplied degrees do not contain the fitted tail")
    body = deg[deg < fit.k_min]
    n = len(deg)
    children = seed_children(seed, n_resamples)
    kwargs = {"min_tail_size": min_tail_size}
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda c: _bootstrap_one(c, n, fit, body, kwargs), children))
    else:
        results = [_bootstrap_one(c, n, fit, body, kwargs) for c in children]
    valid = [d for d in results if d is not None]
    if not valid:
        raise TailTooSmall("no synthetic sample could be refitted")
    return sum(d > fit.ks_distance for d in valid) / len(valid)


def with_gof(fit: PowerLawFit, degrees, n_resamples: int, seed=None, **kwargs) -> PowerLawFit:
    return replace(fit, gof_p_value=bootstrap_gof(fit, degrees, n_resamples, seed, **kwargs))
