"""Direct problem: point-loaded clamped plate on a Winkler foundation."""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .discretization import point_load_vector
from .errors import (IndefiniteSystemError, LoadPlacementError, SolverDivergenceError,
                     ValidationError)
from .regions import Annulus

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class LoadCase:
    """Concentrated force ``f = rho0^2 f_bar`` at ``P0``."""
    P0: tuple
    f_bar: float = 1.0
    d: float = 0.2
    rho0: float = 1.0

    def __post_init__(self):
        if not self.f_bar > 0:
            raise ValidationError("f_bar must be positive")
        if not self.d > 0:
            raise ValidationError("separation constant d must be positive")

    @property
    def f(self):
        return self.rho0 ** 2 * self.f_bar

    def check(self, domain):
        dist = float(domain.boundary_distance(self.P0[0], self.P0[1]))
        if dist < self.d * self.rho0 * (1 - 1e-12):
            raise LoadPlacementError(f"dist(P0, boundary) = {dist:g} < d rho0 = {self.d * self.rho0:g}")
        return dist

    def vector(self, space):
        return point_load_vector(space, self.P0, self.f, self.d)

    def describe(self):
        return {"P0": list(map(float, self.P0)), "f_bar": self.f_bar, "d": self.d,
                "rho0": self.rho0, "f": self.f}


class Deflection:
    """Spline deflection over the active degrees of freedom of a space."""

    def __init__(self, space, coefs, meta=None):
        coefs = np.asarray(coefs, float)
        if coefs.shape != (space.n,):
            raise ValidationError(f"expected {space.n} coefficients, got {coefs.shape}")
        if not np.all(np.isfinite(coefs)):
            raise SolverDivergenceError("non-finite deflection coefficients")
        self.space = space
        self.coefs = coefs
        self.meta = dict(meta or {})

    def __repr__(self):
        return f"Deflection({self.space!r})"

    def __add__(self, other):
        return Deflection(self.space, self.coefs + other.coefs)

    def __sub__(self, other):
        return Deflection(self.space, self.coefs - other.coefs)

    def __mul__(self, c):
        return Deflection(self.space, float(c) * self.coefs, self.meta)

    __rmul__ = __mul__

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        v = self.space.evaluate_derivatives(self.coefs, x.ravel(), y.ravel(), 0)[(0, 0)]
        return v.reshape(x.shape)

    def gradient(self, x, y):
        d = self.derivatives(x, y, 1)
        return np.stack([d[(1, 0)], d[(0, 1)]], axis=-1)

    def derivatives(self, x, y, max_order):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        d = self.space.evaluate_derivatives(self.coefs, x.ravel(), y.ravel(), max_order)
        return {k: v.reshape(x.shape) for k, v in d.items()}

    def evaluate(self, pts, order=0):
        """Values and full derivative tensors up to ``order`` at ``pts`` (shape ``(N, 2)``).

        Returns a list ``[w, grad w, grad^2 w, grad^3 w][:order + 1]`` with
        shapes ``(N,)``, ``(N, 2)``, ``(N, 2, 2)``, ``(N, 2, 2, 2)``.
        """
        if not 0 <= order <= 3:
            raise ValidationError("order must be between 0 and 3")
        pts = np.atleast_2d(np.asarray(pts, float))
        d = self.space.evaluate_derivatives(self.coefs, pts[:, 0], pts[:, 1], order)
        out = []
        for k in range(order + 1):
            T = np.empty((len(pts),) + (2,) * k)
            for idx in np.ndindex(*(2,) * k):
                ny = sum(idx)
                T[(slice(None),) + idx] = d[(k - ny, ny)]
            out.append(T)
        return out


def _factorize(A):
    """Jacobi-scaled dense Cholesky; raises on loss of positive definiteness."""
    dg = A.diagonal()
    if np.any(dg <= 0):
        raise IndefiniteSystemError("nonpositive diagonal entry in system matrix")
    s = 1.0 / np.sqrt(dg)
    As = (sp.diags(s) @ A @ sp.diags(s)).toarray()
    try:
        cf = scipy.linalg.cho_factor(As, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise IndefiniteSystemError(f"system matrix is not positive definite: {exc}") from None
    return s, cf


def solve_direct(K, Mk, F, space=None, method="cholesky", meta=None, refine=2):
    """Solve ``(K + Mk) w = F``.

    Direct mode factorises the Jacobi-scaled matrix by dense Cholesky and
    applies a few steps of iterative refinement.  ``method="cg"`` uses
    preconditioned conjugate gradients with a diagonal preconditioner.
    Returns a :class:`Deflection` when ``space`` is given, otherwise the
    coefficient vector.
    """
    A = sp.csr_matrix(K + Mk if Mk is not None else K)
    F = np.asarray(F, float)
    fnorm = np.linalg.norm(F)
    if fnorm == 0:
        w = np.zeros_like(F)
    elif method == "cholesky":
        s, cf = _factorize(A)
        w = s * scipy.linalg.cho_solve(cf, s * F)
        for _ in range(refine):
            r = F - A @ w
            w = w + s * scipy.linalg.cho_solve(cf, s * r)
    elif method == "cg":
        dg = A.diagonal()
        if np.any(dg <= 0):
            raise IndefiniteSystemError("nonpositive diagonal entry in system matrix")
        M = sp.diags(1.0 / dg)
        w, info = spla.cg(A, F, rtol=1e-12, atol=0.0, M=M, maxiter=50 * A.shape[0])
        if info != 0:
            res = np.linalg.norm(F - A @ w) / fnorm
            raise SolverDivergenceError(f"CG did not converge (info={info}, residual {res:.2e})", res)
    else:
        raise ValidationError(f"unknown solver method {method!r}")
    if fnorm > 0:
        res = np.linalg.norm(F - A @ w) / fnorm
        if not res <= RESIDUAL_TOL:
            raise SolverDivergenceError(f"relative residual {res:.2e} above {RESIDUAL_TOL:g}", res)
    if space is None:
        return w
    return Deflection(space, w, meta)


def energy_identity(w, K, Mk, load):
    """``(w^T (K + Mk) w, f w(P0))``: both sides of the weak form tested with ``w``."""
    c = w.coefs
    lhs = float(c @ (K @ c) + (c @ (Mk @ c) if Mk is not None else 0.0))
    rhs = float(load.f * w(np.array(load.P0[0]), np.array(load.P0[1])))
    return lhs, rhs


@dataclass
class LoadNeighborhood:
    sigma_bar_emp: float
    ok: bool
    w_P0: float
    min_on_disc: float
    annulus_energy: dict = field(default_factory=dict)


def check_load_neighborhood(w, load, n_radii=200, n_angles=64):
    """Empirical radius around ``P0`` on which ``w >= w(P0) / 2``.

    Scans circles of increasing radius up to ``d rho0 / 2`` and returns the
    largest radius for which the minimum of ``w`` over the closed disc stays
    above half the value at the load point, together with annulus energies
    ``int_{B_2s \\ B_s} w^2`` for ``s`` up to half that radius.
    """
    x0, y0 = map(float, load.P0)
    wP0 = float(w(np.array(x0), np.array(y0)))
    r_max = load.d * load.rho0 / 2
    radii = np.linspace(0, r_max, n_radii + 1)[1:]
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    R, T = np.meshgrid(radii, th, indexing="ij")
    vals = w(x0 + R * np.cos(T), y0 + R * np.sin(T)).min(axis=1)
    running = np.minimum.accumulate(np.minimum(vals, wP0))
    good = np.nonzero(running >= 0.5 * wP0)[0] if wP0 > 0 else np.array([], int)
    sigma = float(radii[good[-1]]) if good.size else 0.0
    min_disc = float(running[good[-1]]) if good.size else float(running[0])

    energies = {}
    if sigma > 0:
        for frac in (0.125, 0.25, 0.5):
            s = frac * sigma
            x, y, wq = Annulus(x0, y0, s, 2 * s).quadrature(4, 6)
            energies[repr(frac)] = float(wq @ w(x, y) ** 2)
    ok = wP0 > 0 and sigma > 0 and all(v > 0 for v in energies.values())
    return LoadNeighborhood(sigma, bool(ok), wP0, min_disc, energies)
