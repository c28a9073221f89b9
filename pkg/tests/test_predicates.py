from fractions import Fraction

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from vgnet._predicates import below


def below_exact(ti, pi, tk, pk, tj, pj):
    ti, pi, tk, pk, tj, pj = map(Fraction, (ti, pi, tk, pk, tj, pj))
    return (pk - pi) * (tj - ti) < (pj - pi) * (tk - ti)


coords = st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False)


@given(coords, coords, coords, coords, coords, coords)
def test_matches_rational_arithmetic(ti, pi, tk, pk, tj, pj):
    assert below(ti, pi, tk, pk, tj, pj) == below_exact(ti, pi, tk, pk, tj, pj)


@given(
    st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3),
    st.integers(1, 1000), st.integers(-3, 3),
)
def test_near_collinear_points(pi, slope, dt, steps, ulps):
    # k sits on (or within a few ulps of) the chord from i to j
    ti, tk, tj = 0.0, dt, dt * (steps + 1)
    pj = pi + slope * tj
    pk = pi + slope * tk
    for _ in range(abs(ulps)):
        pk = np.nextafter(pk, np.inf if ulps > 0 else -np.inf)
    assert below(ti, pi, tk, pk, tj, pj) == below_exact(ti, pi, tk, pk, tj, pj)


def test_exactly_on_chord_blocks():
    assert not below(0.0, 0.0, 1.0, 1.0, 2.0, 2.0)
    assert below(0.0, 0.0, 1.0, 0.5, 2.0, 2.0)
    assert not below(0.0, 0.0, 1.0, 1.5, 2.0, 2.0)


def test_random_triples_with_tiny_perturbations():
    rng = np.random.default_rng(7)
    for _ in range(3000):
        t = np.sort(rng.uniform(0, 100, 3))
        p = rng.normal(size=3)
        p[1] = p[0] + (p[2] - p[0]) * (t[1] - t[0]) / (t[2] - t[0])
        p[1] += rng.integers(-2, 3) * np.spacing(p[1])
        args = (t[0], p[0], t[1], p[1], t[2], p[2])
        assert below(*args) == below_exact(*args)
