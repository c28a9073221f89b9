"""Exact visibility predicate for double-precision inputs.

The test ``p_k`` strictly below the chord from ``(t_i, p_i)`` to ``(t_j, p_j)``
reduces to the sign of

    (p_k - p_i) * (t_j - t_i) - (p_j - p_i) * (t_k - t_i)

A floating-point filter settles almost every call; when the rounded value is
within the error bound the sign is recomputed exactly with error-free
transformations (two-sum / two-product expansions). Every construction routine
goes through :func:`below`, so their outputs are the exact real-number answer
for the given doubles.
"""

import numpy as np
from numba import njit

_EPS = 2.0**-53
_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
_SPLITTER = 134217729.0  # 2**27 + 1


@njit(cache=True, nogil=True, inline="always")
def _two_sum(a, b):
    x = a + b
    bv = x - a
    av = x - bv
    return x, (a - av) + (b - bv)


@njit(cache=True, nogil=True, inline="always")
def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@njit(cache=True, nogil=True, inline="always")
def _two_product(a, b):
    x = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err = alo * blo - (((x - ahi * bhi) - alo * bhi) - ahi * blo)
    return x, err


@njit(cache=True, nogil=True)
def _exact_sign(pi, pk, pj, ti, tk, tj):
    a1, a0 = _two_sum(pk, -pi)
    b1, b0 = _two_sum(tj, -ti)
    c1, c0 = _two_sum(pj, -pi)
    d1, d0 = _two_sum(tk, -ti)
    terms = np.empty(16)
    n = 0
    for x, y, s in ((a1, b1, 1.0), (a1, b0, 1.0), (a0, b1, 1.0), (a0, b0, 1.0),
                    (c1, d1, -1.0), (c1, d0, -1.0), (c0, d1, -1.0), (c0, d0, -1.0)):
        h, l = _two_product(x, y)
        terms[n] = s * h
        terms[n + 1] = s * l
        n += 2
    # Grow-expansion: the result is a nonoverlapping expansion whose largest
    # nonzero component carries the sign of the exact sum.
    e = np.zeros(17)
    m = 0
    for idx in range(16):
        q = terms[idx]
        for r in range(m):
            q, h = _two_sum(q, e[r])
            e[r] = h
        e[m] = q
        m += 1
    for r in range(m - 1, -1, -1):
        if e[r] > 0.0:
            return 1
        if e[r] < 0.0:
            return -1
    return 0


@njit(cache=True, nogil=True)
def below(ti, pi, tk, pk, tj, pj):
    """True iff point k lies strictly below the chord from point i to point j (t_i < t_j)."""
    left = (pk - pi) * (tj - ti)
    right = (pj - pi) * (tk - ti)
    det = left - right
    bound = _ERRBOUND * (abs(left) + abs(right))
    if det < -bound:
        return True
    if det > bound:
        return False
    return _exact_sign(pi, pk, pj, ti, tk, tj) < 0
