"""One-dimensional B-spline kernels.

Vectorised versions of the classical knot-span search and the
all-derivatives basis recursion (Piegl & Tiller, algorithms A2.1 and A2.3).
Everything operates on arrays of evaluation points at once.
"""
from math import factorial

import numpy as np


def open_uniform_knots(a, b, n_spans, degree):
    """Open (clamped) knot vector with ``n_spans`` equal spans on ``[a, b]``."""
    interior = np.linspace(a, b, n_spans + 1)
    return np.concatenate([np.full(degree, a), interior, np.full(degree, b)])


def n_basis(knots, degree):
    return len(knots) - degree - 1


def find_spans(knots, degree, x):
    """Index ``i`` with ``knots[i] <= x < knots[i+1]`` (last span closed)."""
    x = np.asarray(x, dtype=float)
    n = n_basis(knots, degree)
    spans = np.searchsorted(knots, x, side="right") - 1
    return np.clip(spans, degree, n - 1)


def basis_ders(knots, degree, x, n_ders, spans=None):
    """Nonzero basis functions and their derivatives.

    Returns
    -------
    spans : (N,) int array
    ders : (N, n_ders + 1, degree + 1) array
        ``ders[q, k, r]`` is the ``k``-th derivative of basis function
        ``spans[q] - degree + r`` at ``x[q]``.  Derivatives above ``degree``
        are zero.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = degree
    if spans is None:
        spans = find_spans(knots, p, x)
    npts = x.size
    nd = min(n_ders, p)

    # point axis last keeps the inner loops on contiguous rows
    ndu = np.zeros((p + 1, p + 1, npts))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, npts))
    right = np.zeros((p + 1, npts))
    for j in range(1, p + 1):
        left[j] = x - knots[spans + 1 - j]
        right[j] = knots[spans + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n_ders + 1, p + 1, npts))
    ders[0] = ndu[:, p]
    a = np.zeros((2, p + 1, npts))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[:] = 0.0
        a[0, 0] = 1.0
        for k in range(1, nd + 1):
            d = np.zeros(npts)
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d += a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for jj in range(j1, j2 + 1):
                a[s2, jj] = (a[s1, jj] - a[s1, jj - 1]) / ndu[pk + 1, rk + jj]
                d += a[s2, jj] * ndu[rk + jj, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    for k in range(1, nd + 1):
        ders[k] *= factorial(p) / factorial(p - k)
    ders = np.ascontiguousarray(ders.transpose(2, 0, 1))
    return spans, ders


def greville(knots, degree):
    n = n_basis(knots, degree)
    return np.array([knots[i + 1:i + degree + 1].mean() for i in range(n)])


def collocation_matrix(knots, degree, x, der=0):
    """Dense matrix ``C[q, i] = d^der B_i(x_q)``."""
    spans, d = basis_ders(knots, degree, x, der)
    n = n_basis(knots, degree)
    C = np.zeros((len(spans), n))
    rows = np.repeat(np.arange(len(spans)), degree + 1)
    cols = (spans[:, None] - degree + np.arange(degree + 1)).ravel()
    C[rows, cols] = d[:, der, :].ravel()
    return C


def gauss_on_spans(knots, degree, order):
    """Gauss-Legendre points and weights on every nonempty knot span.

    Returns ``(x, w)`` with shape ``(n_spans, order)``.
    """
    breaks = np.unique(knots)
    g, gw = np.polynomial.legendre.leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    x = 0.5 * (a + b) + 0.5 * (b - a) * g[None, :]
    w = 0.5 * (b - a) * gw[None, :]
    return x, w
