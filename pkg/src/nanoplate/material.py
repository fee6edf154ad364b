"""Isotropic strain-gradient plate material and its constitutive tensors.

The classical bending tensor ``P``, the gradient correction ``Ph`` (both
rank 4) and the sixth-order tensor ``Q`` are built from Kronecker deltas
with coefficients that depend on the Lamé fields, the thickness and three
material length scales.  Index ranges are ``{0, 1}``.
"""
from dataclasses import dataclass, field
import hashlib
import json

import numpy as np
import scipy.linalg

from .errors import (InvalidMaterialError, InvalidTensorSplitError,
                     MaterialNotConvexError, SingularMaterialError)
from .fields import Field, constant

_D = np.eye(2)

# delta products; P = B((1-nu) I_AC_BD + nu I_AB_CD)
I_AC_BD = np.einsum("ac,bd->abcd", _D, _D)
I_AB_CD = np.einsum("ab,cd->abcd", _D, _D)

T_TRACE = np.einsum("ij,kn,lm->ijklmn", _D, _D, _D)
T_MIXED = (np.einsum("ik,jl,mn->ijklmn", _D, _D, _D) + np.einsum("ik,jm,ln->ijklmn", _D, _D, _D)
           + np.einsum("jk,il,mn->ijklmn", _D, _D, _D) + np.einsum("jk,im,ln->ijklmn", _D, _D, _D))
T_Q8 = np.einsum("kn,il,jm->ijklmn", _D, _D, _D) + np.einsum("kn,im,jl->ijklmn", _D, _D, _D)
T_Q9 = (np.einsum("jn,il,km->ijklmn", _D, _D, _D) + np.einsum("jn,im,kl->ijklmn", _D, _D, _D)
        + np.einsum("in,jl,km->ijklmn", _D, _D, _D) + np.einsum("in,jm,kl->ijklmn", _D, _D, _D))


def _sym_embedding(rank):
    """Map independent components of a symmetric tensor to its full entries.

    Component ``c`` collects the entries with ``c`` indices equal to 1, so a
    Hessian is ``(w_xx, w_xy, w_yy)`` and a third gradient is
    ``(w_xxx, w_xxy, w_xyy, w_yyy)``.
    """
    S = np.zeros((2 ** rank, rank + 1))
    for flat, idx in enumerate(np.ndindex(*(2,) * rank)):
        S[flat, sum(idx)] = 1.0
    return S


SYM2 = _sym_embedding(2)
SYM3 = _sym_embedding(3)
# |A|^2 in terms of independent components
WEIGHT2 = SYM2.T @ SYM2
WEIGHT3 = SYM3.T @ SYM3


def _reduce(T, S):
    n = S.shape[0]
    return S.T @ T.reshape(n, n) @ S


R_AC_BD = _reduce(I_AC_BD, SYM2)
R_AB_CD = _reduce(I_AB_CD, SYM2)
R_TRACE = _reduce(T_TRACE, SYM3)
R_MIXED = _reduce(T_MIXED, SYM3)
R_Q8 = _reduce(T_Q8, SYM3)
R_Q9 = _reduce(T_Q9, SYM3)

DEFAULT_Q8_FRACTION = 0.6  # q8 = 3 b1 / 2, q9 = b1 / 2


def lame_to_engineering(mu, lam):
    """Young modulus and Poisson ratio from the Lamé moduli."""
    mu = np.asarray(mu, float)
    lam = np.asarray(lam, float)
    den = mu + lam
    if np.any(mu <= 0) or np.any(den <= 0):
        raise InvalidMaterialError("need mu > 0 and mu + lambda > 0")
    E = mu * (2 * mu + 3 * lam) / den
    nu = lam / (2 * den)
    if E.ndim == 0:
        return float(E), float(nu)
    return E, nu


def bending_stiffness(E, nu, t):
    """Plate bending stiffness ``t^3 E / (12 (1 - nu^2))``."""
    nu = np.asarray(nu, float)
    if np.any(np.abs(nu) >= 1):
        raise SingularMaterialError("bending stiffness needs |nu| < 1")
    B = t ** 3 * np.asarray(E, float) / (12 * (1 - nu ** 2))
    return float(B) if B.ndim == 0 else B


@dataclass(frozen=True)
class MaterialParams:
    """Thickness, length scales and Lamé fields of the plate.

    ``q8_fraction`` fixes how the constraint ``2 (q8 + 2 q9) = 5 b1`` is
    split: ``q8 = fraction * 5 b1 / 2`` and ``q9`` takes the rest.
    """
    t: float
    l0: float
    l1: float
    l2: float
    mu_field: Field
    lambda_field: Field
    rho0: float = 1.0
    alpha0: float = 1e-12
    gamma0: float = 1e-12
    q8_fraction: float = DEFAULT_Q8_FRACTION
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for key in ("t", "rho0", "l0", "l1", "l2"):
            if not getattr(self, key) > 0:
                raise InvalidMaterialError(f"{key} must be positive")
        if not (self.alpha0 > 0 and self.gamma0 > 0):
            raise InvalidMaterialError("alpha0 and gamma0 must be positive")

    @classmethod
    def constant(cls, mu, lam, t, l0, l1=None, l2=None, **kw):
        l1 = l0 if l1 is None else l1
        l2 = l0 if l2 is None else l2
        return cls(t=t, l0=l0, l1=l1, l2=l2, mu_field=constant(mu),
                   lambda_field=constant(lam), **kw)

    @property
    def l(self):
        return min(self.l0, self.l1, self.l2)

    def lame(self, x, y):
        """Lamé fields at points, checked against the ellipticity floors."""
        mu = np.asarray(self.mu_field(x, y), float)
        lam = np.asarray(self.lambda_field(x, y), float)
        if not np.all(np.isfinite(mu)) or not np.all(np.isfinite(lam)):
            raise InvalidMaterialError("non-finite Lamé modulus")
        if np.any(mu < self.alpha0):
            raise InvalidMaterialError(f"mu below alpha0={self.alpha0} (min {mu.min():g})")
        if np.any(2 * mu + 3 * lam < self.gamma0):
            raise InvalidMaterialError(f"2 mu + 3 lambda below gamma0={self.gamma0}")
        return mu, lam

    def describe(self):
        return {"t": self.t, "l0": self.l0, "l1": self.l1, "l2": self.l2, "rho0": self.rho0,
                "alpha0": self.alpha0, "gamma0": self.gamma0,
                "q8_fraction": self.q8_fraction,
                "mu": self.mu_field.describe(), "lambda": self.lambda_field.describe()}

    def digest(self):
        blob = json.dumps(self.describe(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DerivedCoefficients:
    E: np.ndarray
    nu: np.ndarray
    B_stiff: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    b0: np.ndarray
    b1: np.ndarray


def coefficients_from_lame(params, mu, lam):
    E, nu = lame_to_engineering(mu, lam)
    t = params.t
    return DerivedCoefficients(
        E=E, nu=nu, B_stiff=bending_stiffness(E, nu, t),
        a0=2 * mu * t * params.l0 ** 2,
        a1=(2 / 15) * mu * t * params.l1 ** 2,
        a2=mu * t * params.l2 ** 2,
        b0=2 * mu * (t ** 3 / 12) * params.l0 ** 2,
        b1=(2 / 5) * mu * (t ** 3 / 12) * params.l1 ** 2,
    )


def derived_coefficients(params, x, y):
    mu, lam = params.lame(x, y)
    return coefficients_from_lame(params, mu, lam)


def scale_coefficients(params, x):
    """``(a0, a1, a2, b0, b1)`` at the point ``x``."""
    c = derived_coefficients(params, np.asarray(x[0], float), np.asarray(x[1], float))
    return tuple(float(v) for v in (c.a0, c.a1, c.a2, c.b0, c.b1))


@dataclass(frozen=True)
class TensorTriple:
    P: np.ndarray
    Ph: np.ndarray
    Q: np.ndarray
    q8: float
    q9: float
    b1: float


def _split(params, b1, q_split):
    if q_split is None:
        q8 = params.q8_fraction * 5 * b1 / 2
        q9 = (5 * b1 - 2 * q8) / 4
        return q8, q9
    q8, q9 = map(float, q_split)
    if abs(2 * (q8 + 2 * q9) - 5 * b1) > 1e-12 * abs(5 * b1):
        raise InvalidTensorSplitError(
            f"2(q8 + 2 q9) = {2 * (q8 + 2 * q9)!r} but 5 b1 = {5 * b1!r}")
    return q8, q9


def build_tensors(params, x, q_split=None):
    """Constitutive tensors at one point ``x = (x1, x2)``.

    The arrays follow the delta formulas literally; they have major symmetry
    and act symmetrically on symmetric arguments, which is all the energy
    ever sees.
    """
    c = derived_coefficients(params, np.asarray(x[0], float), np.asarray(x[1], float))
    B, nu = float(c.B_stiff), float(c.nu)
    a0, a1, a2, b0, b1 = (float(v) for v in (c.a0, c.a1, c.a2, c.b0, c.b1))
    q8, q9 = _split(params, b1, q_split)
    P = B * ((1 - nu) * I_AC_BD + nu * I_AB_CD)
    Ph = (2 * a2 + 5 * a1) * I_AC_BD + (a0 - a1 - a2) * I_AB_CD
    Q = ((b0 - 3 * b1) / 3 * T_TRACE + (b0 - 3 * b1) / 6 * T_MIXED
         + q8 * T_Q8 + q9 * T_Q9)
    return TensorTriple(P=P, Ph=Ph, Q=Q, q8=q8, q9=q9, b1=b1)


def apply_rank4(T, A):
    """``(T A)_ij = sum_lm T_ijlm A_lm``."""
    return np.einsum("ijlm,lm->ij", T, A)


def apply_rank6(T, B):
    """``(T B)_ijk = sum_lmn T_ijklmn B_lmn``."""
    return np.einsum("ijklmn,lmn->ijk", T, B)


def _min_rayleigh(M, W):
    M = 0.5 * (M + M.T)
    return float(scipy.linalg.eigh(M, W, eigvals_only=True)[0])


def verify_convexity(T, params):
    """Normalised minimum Rayleigh quotients ``(xi_P, xi_Q)``.

    ``xi_P`` is the smallest value of ``(P + Ph) A . A / |A|^2`` over
    symmetric ``A`` divided by ``t (t^2 + l^2)``; ``xi_Q`` is the same for
    ``Q`` over fully symmetric rank-3 arguments divided by ``t^3 l^2``.
    """
    t, l = params.t, params.l
    xi_P = _min_rayleigh(_reduce(T.P + T.Ph, SYM2), WEIGHT2) / (t * (t ** 2 + l ** 2))
    xi_Q = _min_rayleigh(_reduce(T.Q, SYM3), WEIGHT3) / (t ** 3 * l ** 2)
    if not (xi_P > 0 and xi_Q > 0):
        raise MaterialNotConvexError(f"xi_P={xi_P:g}, xi_Q={xi_Q:g}")
    return xi_P, xi_Q


def reduced_forms(params, x, y, q8_fraction=None):
    """Energy densities on independent components at many points.

    Returns ``(M2, M3)`` of shapes ``(N, 3, 3)`` and ``(N, 4, 4)`` such that
    ``(P + Ph) grad2 w . grad2 v = h(w)^T M2 h(v)`` and likewise for ``Q``
    with the third gradients.
    """
    c = derived_coefficients(params, x, y)
    frac = params.q8_fraction if q8_fraction is None else q8_fraction
    B, nu = np.atleast_1d(c.B_stiff), np.atleast_1d(c.nu)
    a0, a1, a2 = np.atleast_1d(c.a0), np.atleast_1d(c.a1), np.atleast_1d(c.a2)
    b0, b1 = np.atleast_1d(c.b0), np.atleast_1d(c.b1)
    q8 = frac * 5 * b1 / 2
    q9 = (5 * b1 - 2 * q8) / 4
    cf_ac = B * (1 - nu) + 2 * a2 + 5 * a1
    cf_ab = B * nu + a0 - a1 - a2
    M2 = cf_ac[:, None, None] * R_AC_BD + cf_ab[:, None, None] * R_AB_CD
    M3 = ((b0 - 3 * b1)[:, None, None] * (R_TRACE / 3 + R_MIXED / 6)
          + q8[:, None, None] * R_Q8 + q9[:, None, None] * R_Q9)
    M2 = 0.5 * (M2 + M2.transpose(0, 2, 1))
    M3 = 0.5 * (M3 + M3.transpose(0, 2, 1))
    return M2, M3
