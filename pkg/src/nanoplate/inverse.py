"""Recovery of the subgrade coefficient from interior deflection data.

Testing the weak form against a clamped basis function ``v`` gives, for the
measured deflection ``w``,

    int kappa w v = f v(P0) - int (P + Ph) grad^2 w . grad^2 v - int Q grad^3 w . grad^3 v,

which is linear in ``kappa``.  Expanding ``kappa`` in a coarse spline basis
and collecting one equation per admissible test function yields an
overdetermined system that is solved with Tikhonov regularization.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .discretization import assemble_kappa_mass, assemble_stiffness, gram_matrix
from .errors import DegenerateDataError, InsufficientSamplesError, ValidationError
from .fields import SplineField
from .norms import NormConfig, interior_region, l2_norm
from .solver import Deflection, solve_direct


@dataclass
class Measurement:
    """Deflection samples ``values`` at ``points`` (shape ``(N, 2)``)."""
    points: np.ndarray
    values: np.ndarray
    eps: float = 0.0
    noise_std: float = 0.0
    seed: int | None = None
    sigma: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, float).reshape(-1, 2)
        self.values = np.asarray(self.values, float).ravel()
        if len(self.points) != len(self.values):
            raise ValidationError("points and values differ in length")
        if self.eps < 0 or self.noise_std < 0:
            raise ValidationError("noise level must be nonnegative")

    def metadata(self):
        return {"eps": self.eps, "noise_std": self.noise_std, "seed": self.seed,
                "sigma": self.sigma, "n_samples": len(self.values), **self.meta}

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "w"])
            for (x, y), v in zip(self.points, self.values):
                wr.writerow([repr(float(x)), repr(float(y)), repr(float(v))])
        path.with_suffix(".json").write_text(json.dumps(self.metadata(), sort_keys=True, indent=2))

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta_path = path.with_suffix(".json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        extra = {k: v for k, v in meta.items()
                 if k not in ("eps", "noise_std", "seed", "sigma", "n_samples")}
        return cls(data[:, :2], data[:, 2], meta.get("eps", 0.0), meta.get("noise_std", 0.0),
                   meta.get("seed"), meta.get("sigma"), extra)


def sample_grid(domain, n):
    """Cell-centred ``n x n`` grid over the plate."""
    xs = (np.arange(n) + 0.5) / n * domain.Lx
    ys = (np.arange(n) + 0.5) / n * domain.Ly
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def noise_std_for(eps, domain, f_bar=1.0):
    """Per-sample std whose white-noise L2 norm is about ``eps rho0 f_bar``."""
    r = domain.rho0
    return eps * r * f_bar * r / np.sqrt(domain.area)


def measure(w, n=48, eps=0.0, f_bar=1.0, seed=0, sigma=None):
    """Sample ``w`` on a uniform grid and add Gaussian noise of level ``eps``."""
    dom = w.space.domain
    pts = sample_grid(dom, n)
    vals = w(pts[:, 0], pts[:, 1])
    std = noise_std_for(eps, dom, f_bar)
    if std > 0:
        vals = vals + np.random.default_rng(seed).normal(0.0, std, vals.shape)
    return Measurement(pts, vals, eps, std, seed, sigma)


def project_measurement(m, space, smoothing=True, lam=None):
    """Least-squares spline fit of the samples with an optional ``grad^3`` penalty.

    With ``smoothing`` on and ``lam`` unset, the penalty weight is picked by
    the discrepancy principle: the RMS fit residual matches ``m.noise_std``.
    Returns a :class:`Deflection` carrying the chosen weight in its metadata.
    """
    if len(m.values) < space.n:
        raise InsufficientSamplesError(f"{len(m.values)} samples for {space.n} unknowns")
    Bm = space.basis_matrix(m.points[:, 0], m.points[:, 1])
    BtB = (Bm.T @ Bm).toarray()
    Btv = Bm.T @ m.values
    G = gram_matrix(space, 3).toarray()
    scale = np.trace(BtB) / np.trace(G)

    def fit(lmb):
        try:
            cf = scipy.linalg.cho_factor(BtB + lmb * scale * G)
        except np.linalg.LinAlgError:
            raise InsufficientSamplesError("sample set does not determine the spline fit") from None
        c = scipy.linalg.cho_solve(cf, Btv)
        return c, float(np.sqrt(np.mean((Bm @ c - m.values) ** 2)))

    if np.linalg.matrix_rank(BtB) < space.n:
        raise InsufficientSamplesError("sample set does not determine the spline fit")
    if lam is None:
        lam = 0.0
        if smoothing and m.noise_std > 0:
            lo, hi = -16.0, 2.0
            if fit(10.0 ** lo)[1] < m.noise_std:
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    if fit(10.0 ** mid)[1] < m.noise_std:
                        lo = mid
                    else:
                        hi = mid
                lam = 10.0 ** lo
    c, rms = fit(lam)
    return Deflection(space, c, {"projection_lambda": lam, "fit_rms": rms, **m.metadata()})


def kappa_basis(domain, state_spans, coarsen=4, degree=2):
    """Reconstruction basis: degree-2 splines ``coarsen`` times coarser than the state."""
    nx, ny = (state_spans, state_spans) if np.isscalar(state_spans) else state_spans
    return SplineField(domain.Lx, domain.Ly, (max(1, nx // coarsen), max(1, ny // coarsen)), degree)


def admissible_tests(space, sigma, P0=None, exclude_radius=0.0):
    """Active functions supported in the interior region, optionally avoiding a disc at ``P0``."""
    r = sigma * space.domain.rho0
    box = space.active_support()
    tol = 1e-12 * max(space.domain.Lx, space.domain.Ly)
    inside = ((box[:, 0] >= r - tol) & (box[:, 1] <= space.domain.Lx - r + tol)
              & (box[:, 2] >= r - tol) & (box[:, 3] <= space.domain.Ly - r + tol))
    if P0 is not None and exclude_radius > 0:
        dx = np.maximum(np.maximum(box[:, 0] - P0[0], P0[0] - box[:, 1]), 0.0)
        dy = np.maximum(np.maximum(box[:, 2] - P0[1], P0[1] - box[:, 3]), 0.0)
        inside &= np.hypot(dx, dy) >= exclude_radius
    return np.nonzero(inside)[0]


@dataclass
class ReconstructionResult:
    kappa: SplineField
    kappa_raw: np.ndarray
    alpha: float
    alpha_eff: float
    residual: float
    residual_rel: float
    sigma: float
    mask_fraction: float
    n_tests: int
    clipped: int
    tests: np.ndarray = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    def summary(self):
        return {"alpha": self.alpha, "alpha_eff": self.alpha_eff, "residual": self.residual,
                "residual_rel": self.residual_rel, "sigma": self.sigma,
                "mask_fraction": self.mask_fraction, "n_tests": self.n_tests,
                "n_kappa": self.kappa.size, "clipped": self.clipped, **self.diagnostics}

    def to_csv(self, path, n=41):
        dom_x = np.linspace(0, self.kappa.Lx, n)
        dom_y = np.linspace(0, self.kappa.Ly, n)
        X, Y = np.meshgrid(dom_x, dom_y)
        K = self.kappa(X, Y)
        with Path(path).open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "kappa"])
            for x, y, k in zip(X.ravel(), Y.ravel(), K.ravel()):
                wr.writerow([repr(float(x)), repr(float(y)), repr(float(k))])


def reconstruct_kappa(w_meas, load, material, basis, alpha=1e-14, sigma=0.125, kbar=2.0,
                      mode="exclude", exclude_radius=None, K=None, mask_tol=1e-3,
                      reference="constant"):
    """Tikhonov-regularized weak-form reconstruction of ``kappa`` on ``basis``.

    ``alpha`` is relative to the mean squared column norm of the system, so
    the result does not change when the load and the data are scaled
    together.  In ``"exclude"`` mode, test functions whose support meets the
    disc of radius ``exclude_radius`` around the load point are dropped and
    the point-load term disappears; ``"include"`` keeps it.
    """
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    if mode not in ("exclude", "include"):
        raise ValidationError(f"unknown test-function mode {mode!r}")
    space = w_meas.space
    rho0 = space.domain.rho0
    if K is None:
        K = assemble_stiffness(space, material)
    if mode == "exclude":
        if exclude_radius is None:
            raise ValidationError("exclude mode needs exclude_radius")
        tests = admissible_tests(space, sigma, load.P0, exclude_radius)
    else:
        tests = admissible_tests(space, sigma)
    if tests.size == 0:
        raise DegenerateDataError("no test functions inside the interior region")

    x, y, wq = space.quadrature()
    wv = w_meas(x, y)
    Bv = space.basis_matrix(x, y)[:, tests]
    Bk = basis.basis_matrix(x, y)
    A = (Bv.T @ sp.diags(wq * wv) @ Bk).toarray()
    F = np.zeros(space.n) if mode == "exclude" else load.vector(space)
    r = F[tests] - (K @ w_meas.coefs)[tests]

    interior = interior_region(space.domain, sigma * rho0)
    iq = interior.contains(x, y)
    wmax = np.max(np.abs(wv[iq])) if iq.any() else 0.0
    if not wmax > 0:
        raise DegenerateDataError("measured deflection vanishes on the interior region")
    small = iq & (np.abs(wv) < mask_tol * wmax)
    mask_fraction = float(wq[small].sum() / wq[iq].sum())

    colnorm = np.sum(A ** 2) / A.shape[1]
    if not colnorm > 0:
        raise DegenerateDataError("reconstruction system is identically zero")
    alpha_eff = alpha * colnorm
    n_k = A.shape[1]
    if reference == "constant":
        s1 = A.sum(axis=1)
        k_ref = float(s1 @ r / (s1 @ s1)) if s1 @ s1 > 0 else 0.0
    elif reference == "zero":
        k_ref = 0.0
    else:
        raise ValidationError(f"unknown regularization reference {reference!r}")
    Astack = np.vstack([A, np.sqrt(alpha_eff) * np.eye(n_k)])
    rstack = np.concatenate([r - k_ref * A.sum(axis=1), np.zeros(n_k)])
    c_raw = k_ref + scipy.linalg.lstsq(Astack, rstack, lapack_driver="gelsd")[0]
    kmax = kbar / rho0
    c = np.clip(c_raw, 0.0, kmax)
    res_vec = A @ c - r
    rn = float(np.linalg.norm(r))
    return ReconstructionResult(
        kappa=basis.with_coefs(c.reshape(basis.shape)), kappa_raw=c_raw, alpha=alpha,
        alpha_eff=float(alpha_eff), residual=float(np.linalg.norm(res_vec)),
        residual_rel=float(np.linalg.norm(res_vec) / rn) if rn > 0 else 0.0,
        sigma=sigma, mask_fraction=mask_fraction, n_tests=int(tests.size),
        clipped=int(np.sum(c != c_raw)), tests=tests,
        diagnostics={"mode": mode, "exclude_radius": exclude_radius},
    )


def weak_form_residual(result, w_meas, load, K):
    """Residual norm recomputed through an assembled ``M_kappa_hat``."""
    space = w_meas.space
    M = assemble_kappa_mass(space, result.kappa)
    F = np.zeros(space.n) if result.diagnostics.get("mode") == "exclude" else load.vector(space)
    res = (K @ w_meas.coefs + M @ w_meas.coefs - F)[result.tests]
    return float(np.linalg.norm(res))


def kappa_error(k_hat, k_true, domain, sigma, cfg=None, relative=True):
    """``L2`` distance on the interior region, relative to ``k_true`` when possible."""
    cfg = cfg or NormConfig(rho0=domain.rho0)
    region = interior_region(domain, sigma * domain.rho0)
    err = l2_norm(lambda x, y: k_hat(x, y) - k_true(x, y), region, cfg)
    if not relative:
        return err
    ref = l2_norm(k_true, region, cfg)
    return err / ref if ref > 0 else err


@dataclass
class AlphaChoice:
    alpha: float
    alphas: list
    residuals: list
    noise_level: float
    monotone: bool
    fallback: bool
    results: list = field(repr=False, default_factory=list)

    def summary(self):
        return {"alpha": self.alpha, "alphas": self.alphas, "residuals": self.residuals,
                "noise_level": self.noise_level, "monotone": self.monotone,
                "fallback": self.fallback}


def data_residual(result, w_meas, load, K, cfg=None):
    """Interior forward misfit ``||w_T(kappa_hat) - w_meas||_{L2}``.

    ``w_T`` solves the plate equation with ``kappa_hat`` for the test
    degrees of freedom only, taking the remaining coefficients from
    ``w_meas``.  The result depends on ``kappa_hat`` only on the union of the
    test supports, where the data actually constrain it.
    """
    space = w_meas.space
    cfg = cfg or NormConfig(rho0=space.domain.rho0)
    T = result.tests
    rest = np.setdiff1d(np.arange(space.n), T)
    A = (K + assemble_kappa_mass(space, result.kappa)).tocsr()
    F = load.vector(space)
    rhs = F[T] - A[T][:, rest] @ w_meas.coefs[rest]
    wT = solve_direct(A[T][:, T], None, rhs)
    diff = np.zeros(space.n)
    diff[T] = wT - w_meas.coefs[T]
    return l2_norm(Deflection(space, diff), space.domain, cfg)


def choose_alpha(alphas, w_meas, load, material, basis, noise_level, K=None, **kw):
    """Discrepancy-principle choice over a sweep of regularization weights.

    Picks the weight whose forward data residual is closest to
    ``noise_level`` from above; if every residual exceeds it the smallest
    weight is returned, and if none does the weight with the largest
    residual is returned.
    """
    alphas = sorted(float(a) for a in alphas)
    if not alphas:
        raise ValidationError("empty alpha sweep")
    space = w_meas.space
    if K is None:
        K = assemble_stiffness(space, material)
    results, residuals = [], []
    for a in alphas:
        res = reconstruct_kappa(w_meas, load, material, basis, alpha=a, K=K, **kw)
        results.append(res)
        residuals.append(data_residual(res, w_meas, load, K))
    rs = np.array(residuals)
    monotone = bool(np.all(np.diff(rs) >= -1e-9 * max(rs.max(), 1e-300)))
    above = np.nonzero(rs >= noise_level)[0]
    fallback = False
    if above.size == len(rs):
        i = 0
        fallback = True
    elif above.size:
        i = int(above[np.argmin(rs[above])])
    else:
        i = int(np.argmax(rs))
        fallback = True
    return AlphaChoice(alphas[i], alphas, [float(v) for v in rs], float(noise_level),
                       monotone, fallback, results)
