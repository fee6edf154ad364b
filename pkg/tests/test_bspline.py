import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.interpolate import BSpline

from nanoplate import bspline


@pytest.mark.parametrize("degree, n_spans", [(2, 3), (5, 7), (7, 4)])
def test_derivatives_match_scipy(degree, n_spans, rng):
    t = bspline.open_uniform_knots(0.0, 2.0, n_spans, degree)
    n = bspline.n_basis(t, degree)
    x = np.concatenate([rng.uniform(0, 2, 40), [0.0, 2.0, 1.0]])
    nd = min(3, degree)
    spans, ders = bspline.basis_ders(t, degree, x, nd)
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        spl = BSpline(t, c, degree, extrapolate=False)
        for k in range(nd + 1):
            ref = spl.derivative(k)(x) if k else spl(x)
            r = i - spans + degree
            mine = np.where((r >= 0) & (r <= degree),
                            ders[np.arange(len(x)), k, np.clip(r, 0, degree)], 0.0)
            ok = np.isfinite(ref)
            assert np.allclose(mine[ok], ref[ok], rtol=1e-10, atol=1e-9 * (1 + n_spans) ** k)


@settings(max_examples=50, deadline=None)
@given(x=st.floats(0.0, 1.0), degree=st.integers(2, 7), n_spans=st.integers(1, 12))
def test_partition_of_unity(x, degree, n_spans):
    t = bspline.open_uniform_knots(0.0, 1.0, n_spans, degree)
    _, d = bspline.basis_ders(t, degree, np.array([x]), 1)
    assert d[0, 0].sum() == pytest.approx(1.0, abs=1e-13)
    assert d[0, 1].sum() == pytest.approx(0.0, abs=1e-9)
    assert np.all(d[0, 0] >= -1e-15)


def test_higher_derivatives_vanish():
    t = bspline.open_uniform_knots(0.0, 1.0, 3, 2)
    _, d = bspline.basis_ders(t, 2, np.array([0.3]), 4)
    assert np.all(d[0, 3:] == 0)


def test_greville_collocation_invertible():
    t = bspline.open_uniform_knots(0.0, 1.0, 6, 5)
    C = bspline.collocation_matrix(t, 5, bspline.greville(t, 5))
    assert np.linalg.cond(C) < 1e3


def test_gauss_on_spans_integrates_polynomials():
    t = bspline.open_uniform_knots(0.0, 3.0, 5, 4)
    x, w = bspline.gauss_on_spans(t, 4, 4)
    assert np.sum(w * x.ravel().reshape(w.shape) ** 7) == pytest.approx(3.0 ** 8 / 8, rel=1e-13)
