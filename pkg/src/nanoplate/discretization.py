"""Clamped tensor-product spline space on a rectangle and Galerkin assembly.

Basis functions are open-knot B-splines of degree ``p >= 5``.  The clamped
conditions ``w = w,n = w,nn = 0`` are imposed strongly: the first and last
three functions in each direction are dropped, and every remaining function
vanishes on the boundary together with its first two normal derivatives.

Active degrees of freedom are numbered row-major, ``k = iy * nax + ix``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from . import bspline
from .errors import (DomainError, InsufficientDofsError, InvalidCoefficientError,
                     LoadPlacementError, ValidationError)
from .material import reduced_forms

N_CLAMPED = 3
HESS = [(2, 0), (1, 1), (0, 2)]
THIRD = [(3, 0), (2, 1), (1, 2), (0, 3)]


def derivs_of_order(k):
    """Multi-indices ``(x-order, y-order)`` of total order ``k``, y-order ascending."""
    return [(k - j, j) for j in range(k + 1)]


@dataclass(frozen=True)
class PlateDomain:
    Lx: float = 1.0
    Ly: float = 1.0
    rho0: float = 1.0
    M1: float | None = None

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0 and self.rho0 > 0):
            raise ValidationError("plate sides and rho0 must be positive")
        if self.M1 is not None and self.area > self.M1 * self.rho0 ** 2 * (1 + 1e-12):
            raise ValidationError(f"|Omega| = {self.area} exceeds M1 rho0^2 = {self.M1 * self.rho0 ** 2}")

    @property
    def area(self):
        return self.Lx * self.Ly

    @property
    def aspect_ratio(self):
        return self.Lx / self.Ly

    def contains(self, x, y, tol=1e-12):
        s = tol * max(self.Lx, self.Ly)
        return (x >= -s) & (x <= self.Lx + s) & (y >= -s) & (y <= self.Ly + s)

    def boundary_distance(self, x, y):
        return np.minimum(np.minimum(x, self.Lx - x), np.minimum(y, self.Ly - y))


class SplineSpace:
    """Clamped spline space; see :func:`build_space`."""

    def __init__(self, domain, degree, n_spans, quad_order=None):
        self.domain = domain
        self.degree = p = int(degree)
        self.n_spans = (int(n_spans[0]), int(n_spans[1]))
        self.quad_order = int(quad_order or p + 1)
        self.knots_x = bspline.open_uniform_knots(0.0, domain.Lx, self.n_spans[0], p)
        self.knots_y = bspline.open_uniform_knots(0.0, domain.Ly, self.n_spans[1], p)
        self.nbx = bspline.n_basis(self.knots_x, p)
        self.nby = bspline.n_basis(self.knots_y, p)
        self.nax = self.nbx - 2 * N_CLAMPED
        self.nay = self.nby - 2 * N_CLAMPED
        self.n = self.nax * self.nay

        amap = -np.ones((self.nby, self.nbx), dtype=np.int64)
        c = N_CLAMPED
        amap[c:self.nby - c, c:self.nbx - c] = np.arange(self.n).reshape(self.nay, self.nax)
        self.active_map = amap

        self._qx, self._qwx = bspline.gauss_on_spans(self.knots_x, p, self.quad_order)
        self._qy, self._qwy = bspline.gauss_on_spans(self.knots_y, p, self.quad_order)
        nd = min(p, 3)
        _, dx = bspline.basis_ders(self.knots_x, p, self._qx.ravel(), nd,
                                   spans=np.repeat(np.arange(self.n_spans[0]) + p, self.quad_order))
        _, dy = bspline.basis_ders(self.knots_y, p, self._qy.ravel(), nd,
                                   spans=np.repeat(np.arange(self.n_spans[1]) + p, self.quad_order))
        # (n_elements, n_quad, derivative, local function)
        self._Bx = dx.reshape(self.n_spans[0], self.quad_order, nd + 1, p + 1)
        self._By = dy.reshape(self.n_spans[1], self.quad_order, nd + 1, p + 1)

    def __repr__(self):
        return (f"SplineSpace(p={self.degree}, n_spans={self.n_spans}, "
                f"active={self.nax}x{self.nay})")

    def describe(self):
        return {"Lx": self.domain.Lx, "Ly": self.domain.Ly, "rho0": self.domain.rho0,
                "degree": self.degree, "n_spans": list(self.n_spans),
                "quad_order": self.quad_order}

    @classmethod
    def from_description(cls, d):
        dom = PlateDomain(d["Lx"], d["Ly"], d.get("rho0", 1.0))
        return cls(dom, d["degree"], d["n_spans"], d.get("quad_order"))

    # --- geometry of the basis -------------------------------------------------
    def active_support(self):
        """Support boxes ``(x0, x1, y0, y1)`` of the active functions, shape ``(n, 4)``."""
        p, c = self.degree, N_CLAMPED
        ix = np.arange(c, self.nbx - c)
        iy = np.arange(c, self.nby - c)
        x0, x1 = self.knots_x[ix], self.knots_x[ix + p + 1]
        y0, y1 = self.knots_y[iy], self.knots_y[iy + p + 1]
        X0, Y0 = np.meshgrid(x0, y0)
        X1, Y1 = np.meshgrid(x1, y1)
        return np.stack([X0.ravel(), X1.ravel(), Y0.ravel(), Y1.ravel()], axis=1)

    def coefficient_grid(self, coefs):
        """Active coefficients embedded in the full ``(nby, nbx)`` grid."""
        full = np.zeros((self.nby, self.nbx))
        c = N_CLAMPED
        full[c:self.nby - c, c:self.nbx - c] = np.asarray(coefs).reshape(self.nay, self.nax)
        return full

    # --- quadrature ------------------------------------------------------------
    def quadrature(self):
        """All Gauss points ``(x, y, w)`` ordered by (element row, element col, qy, qx)."""
        ney, nex, nq = self.n_spans[1], self.n_spans[0], self.quad_order
        X = np.broadcast_to(self._qx[None, :, None, :], (ney, nex, nq, nq))
        Y = np.broadcast_to(self._qy[:, None, :, None], (ney, nex, nq, nq))
        W = self._qwy[:, None, :, None] * self._qwx[None, :, None, :]
        return X.ravel().copy(), Y.ravel().copy(), W.ravel().copy()

    def _row_points(self, ey):
        nex, nq = self.n_spans[0], self.quad_order
        X = np.broadcast_to(self._qx[:, None, :], (nex, nq, nq))
        Y = np.broadcast_to(self._qy[ey][None, :, None], (nex, nq, nq))
        W = self._qwy[ey][None, :, None] * self._qwx[:, None, :]
        return X.reshape(nex, -1), Y.reshape(nex, -1), W.reshape(nex, -1)

    def _row_derivs(self, ey, derivs):
        """Local derivative values ``(nex, nq*nq, nloc, len(derivs))`` for one element row."""
        Bx, By = self._Bx, self._By[ey]
        nex, nq, p1 = self.n_spans[0], self.quad_order, self.degree + 1
        out = np.empty((nex, nq, nq, p1, p1, len(derivs)))
        for c, (a, b) in enumerate(derivs):
            # (ex, qy, qx, ry, rx)
            out[..., c] = By[None, :, None, b, :, None] * Bx[:, None, :, a, None, :]
        return out.reshape(nex, nq * nq, p1 * p1, len(derivs))

    def _row_dofs(self, ey):
        p1 = self.degree + 1
        ex = np.arange(self.n_spans[0])
        gy = ey + np.arange(p1)
        gx = ex[:, None] + np.arange(p1)[None, :]
        return self.active_map[gy[None, :, None], gx[:, None, :]].reshape(len(ex), -1)

    # --- evaluation --------------------------------------------------------------
    def _locate(self, x, y):
        x = np.atleast_1d(np.asarray(x, float)).ravel()
        y = np.atleast_1d(np.asarray(y, float)).ravel()
        if not np.all(self.domain.contains(x, y)):
            raise DomainError("point outside the plate")
        return np.clip(x, 0, self.domain.Lx), np.clip(y, 0, self.domain.Ly)

    def basis_matrix(self, x, y, dx=0, dy=0):
        """Sparse ``(N, n)`` matrix of an active-basis derivative at points."""
        x, y = self._locate(x, y)
        p = self.degree
        sx, Nx = bspline.basis_ders(self.knots_x, p, x, dx)
        sy, Ny = bspline.basis_ders(self.knots_y, p, y, dy)
        vals = Ny[:, dy, :, None] * Nx[:, dx, None, :]
        iy = sy[:, None] - p + np.arange(p + 1)
        ix = sx[:, None] - p + np.arange(p + 1)
        cols = self.active_map[iy[:, :, None], ix[:, None, :]]
        rows = np.broadcast_to(np.arange(x.size)[:, None, None], cols.shape)
        keep = cols >= 0
        return sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(x.size, self.n))

    def evaluate_derivatives(self, coefs, x, y, max_order):
        """Dict ``{(a, b): values}`` of all derivatives with ``a + b <= max_order``."""
        if max_order > self.degree:
            raise ValidationError(f"derivatives of order {max_order} exceed degree {self.degree}")
        x, y = self._locate(x, y)
        p = self.degree
        sx, Nx = bspline.basis_ders(self.knots_x, p, x, max_order)
        sy, Ny = bspline.basis_ders(self.knots_y, p, y, max_order)
        full = self.coefficient_grid(coefs)
        iy = sy[:, None] - p + np.arange(p + 1)
        ix = sx[:, None] - p + np.arange(p + 1)
        C = full[iy[:, :, None], ix[:, None, :]]  # (N, ry, rx)
        out = {}
        for k in range(max_order + 1):
            for a, b in derivs_of_order(k):
                out[(a, b)] = np.einsum("nr,nrs,ns->n", Ny[:, b, :], C, Nx[:, a, :])
        return out


def build_space(domain, degree=5, n_spans=(16, 16), quad_order=None):
    """Clamped spline space of the given degree on ``domain``."""
    if degree < 5:
        raise ValidationError("degree must be at least 5 for H^3 conformity with margin")
    if np.isscalar(n_spans):
        n_spans = (n_spans, n_spans)
    if min(n_spans) < 4:
        raise InsufficientDofsError(f"need at least 4 spans per direction, got {tuple(n_spans)}")
    if quad_order is not None and quad_order < degree + 1:
        raise ValidationError("quadrature order must be at least degree + 1")
    return SplineSpace(domain, degree, n_spans, quad_order)


def _assemble(space, derivs, coef, workers=1):
    """Assemble ``sum_t int D_t^T M_t(x) D_t`` over element rows.

    ``derivs`` lists one group of derivative multi-indices per term and
    ``coef(x, y)`` returns the matching list of per-point matrices, shapes
    ``(N, m_t, m_t)``.  Element rows are reduced in a fixed order, so any
    ``workers`` count gives the same matrix.
    """
    nloc = (space.degree + 1) ** 2

    def row(ey):
        X, Y, W = space._row_points(ey)
        Ke = np.zeros((X.shape[0], nloc, nloc))
        for group, M in zip(derivs, coef(X.ravel(), Y.ravel())):
            D = space._row_derivs(ey, group)             # (e, q, a, m)
            ne, nq, m = D.shape[0], D.shape[1], D.shape[3]
            WM = W[..., None, None] * M.reshape(ne, nq, m, m)
            T = np.einsum("eqai,eqij->eaqj", D, WM)
            Ke += T.reshape(ne, nloc, nq * m) @ D.transpose(0, 1, 3, 2).reshape(ne, nq * m, nloc)
        dofs = space._row_dofs(ey)
        r = np.broadcast_to(dofs[:, :, None], Ke.shape)
        c = np.broadcast_to(dofs[:, None, :], Ke.shape)
        keep = (r >= 0) & (c >= 0)
        return r[keep], c[keep], Ke[keep]

    rows = range(space.n_spans[1])
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(row, rows))
    else:
        parts = [row(ey) for ey in rows]
    r = np.concatenate([pt[0] for pt in parts])
    c = np.concatenate([pt[1] for pt in parts])
    v = np.concatenate([pt[2] for pt in parts])
    return sp.coo_matrix((v, (r, c)), shape=(space.n, space.n)).tocsr()


def assemble_stiffness(space, material, q8_fraction=None, workers=1):
    """Curvature plus curvature-gradient stiffness ``K``."""
    return _assemble(space, [HESS, THIRD],
                     lambda x, y: reduced_forms(material, x, y, q8_fraction), workers)


def _kappa_values(kappa, x, y):
    if callable(kappa):
        vals = np.asarray(kappa(x, y), float)
    else:
        vals = np.full(x.shape, float(kappa))
    if not np.all(np.isfinite(vals)):
        raise InvalidCoefficientError("non-finite subgrade coefficient")
    if np.any(vals < 0):
        raise InvalidCoefficientError(f"negative subgrade coefficient (min {vals.min():g})")
    return vals


def assemble_kappa_mass(space, kappa, kappa_max=None, workers=1):
    """``M_ij = int kappa phi_i phi_j``; ``kappa`` is a field or a number."""

    def coef(x, y):
        v = _kappa_values(kappa, x, y)
        if kappa_max is not None and np.any(v > kappa_max * (1 + 1e-12)):
            raise InvalidCoefficientError(f"subgrade coefficient above {kappa_max:g}")
        return v[:, None, None]

    return _assemble(space, [[(0, 0)]], lambda x, y: [coef(x, y)], workers)


def mass_matrix(space):
    return assemble_kappa_mass(space, 1.0)


def gram_matrix(space, k):
    """``int grad^k phi_i . grad^k phi_j`` with the full-tensor inner product."""
    derivs = derivs_of_order(k)
    w = np.array([comb(k, b) for _, b in derivs], float)
    return _assemble(space, [derivs],
                     lambda x, y: [np.broadcast_to(np.diag(w), (x.size, k + 1, k + 1))])


def h3_gram(space):
    """Gram matrix of the rho0-scaled ``H^3`` norm: ``v^T G v = ||v||_{H^3}^2``."""
    r = space.domain.rho0
    G = sum(r ** (2 * i) * gram_matrix(space, i) for i in range(4))
    return G / r ** 2


def point_load_vector(space, P0, f, d=None):
    """``F_i = f phi_i(P0)``; checks ``dist(P0, boundary) >= d rho0`` when ``d`` is given."""
    x0, y0 = float(P0[0]), float(P0[1])
    if not space.domain.contains(np.array([x0]), np.array([y0]))[0]:
        raise LoadPlacementError(f"load point {P0} outside the plate")
    dist = float(space.domain.boundary_distance(x0, y0))
    if d is not None and dist < d * space.domain.rho0 * (1 - 1e-12):
        raise LoadPlacementError(f"load point at distance {dist:g} < d rho0 = {d * space.domain.rho0:g}")
    return f * space.basis_matrix([x0], [y0]).toarray().ravel()


def source_vector(space, g):
    """``F_i = int g phi_i`` for a distributed load ``g(x, y)``."""
    x, y, w = space.quadrature()
    return space.basis_matrix(x, y).T @ (w * np.asarray(g(x, y), float))


def dihedral_permutations(space):
    """Index arrays realising the square's symmetries on active coefficients."""
    if space.nax != space.nay or space.domain.Lx != space.domain.Ly:
        raise ValidationError("dihedral symmetry needs a square space")
    idx = np.arange(space.n).reshape(space.nay, space.nax)
    return {"transpose": idx.T.ravel(), "flip_x": idx[:, ::-1].ravel(),
            "flip_y": idx[::-1, :].ravel(), "anti_transpose": idx[::-1, ::-1].T.ravel(), "rot90": np.rot90(idx, 1).ravel(),
            "rot180": np.rot90(idx, 2).ravel(), "rot270": np.rot90(idx, 3).ravel()}


def prolongation(coarse, fine):
    """Matrix mapping active coefficients of ``coarse`` into ``fine`` exactly.

    Requires nested spaces (same degree, fine breakpoints a superset).
    Built per direction by collocation at the fine Greville points.
    """
    p = fine.degree
    if coarse.degree != p:
        raise ValidationError("prolongation needs equal degrees")
    mats = []
    for kc, kf in ((coarse.knots_y, fine.knots_y), (coarse.knots_x, fine.knots_x)):
        g = bspline.greville(kf, p)
        Cf = bspline.collocation_matrix(kf, p, g)
        Cc = bspline.collocation_matrix(kc, p, g)
        P1 = np.linalg.solve(Cf, Cc)
        c = N_CLAMPED
        mats.append(P1[c:-c, c:-c])
    return np.kron(mats[0], mats[1])
