"""Dimensionless norms with the reference-length convention.

With reference length ``rho0``::

    ||u||_{L2}   = rho0^-1 (int u^2)^(1/2)
    ||u||_{H^k}  = rho0^-1 (sum_i rho0^(2i) int |grad^i u|^2)^(1/2)
    [grad^k u]_s = (int int |grad^k u(x) - grad^k u(y)|^2 / |x-y|^(2+2s))^(1/2)

``|grad^i u|^2`` is the full tensor norm, so the mixed derivative
``d^i u / dx^a dy^b`` enters with multiplicity ``binom(i, b)``.

The double integral is computed as an outer region quadrature times, for
each outer point, a polar integral along rays.  Ray pieces closer than
``delta_cut`` to the outer point use the first-order Taylor expansion of
the integrand, integrated in closed form; the rest use Gauss-Legendre in
``log r``.
"""
from dataclasses import asdict, dataclass
from math import comb

import numpy as np

from .discretization import PlateDomain, derivs_of_order
from .errors import DegenerateDataError, ValidationError
from .regions import Disc, Rect, RectMinusDisc

_CHUNK = 4096


@dataclass(frozen=True)
class NormConfig:
    """Quadrature settings for the norm suite.

    ``n_cells``/``order``: tensor Gauss rule for volume integrals.
    ``n_theta``/``n_radial``: angular and radial nodes of the pair integral.
    ``delta_cut``: radius of the Taylor zone (``None`` means one cell diameter).
    """
    rho0: float = 1.0
    n_cells: int = 16
    order: int = 4
    n_theta: int = 48
    n_radial: int = 16
    delta_cut: float | None = None
    margin: float = 0.0

    def __post_init__(self):
        if not self.rho0 > 0:
            raise ValidationError("rho0 must be positive")
        if min(self.n_cells, self.order, self.n_theta, self.n_radial) < 1:
            raise ValidationError("quadrature resolutions must be positive")
        if self.delta_cut is not None and not self.delta_cut > 0:
            raise ValidationError("delta_cut must be positive")
        if self.margin < 0:
            raise ValidationError("margin must be nonnegative")


def as_region(region):
    if isinstance(region, PlateDomain):
        return Rect(0, region.Lx, 0, region.Ly)
    return region


def region_quadrature(region, cfg):
    region = as_region(region)
    if region.empty:
        raise ValidationError(f"empty integration region {region!r}")
    return region.quadrature(cfg.n_cells, cfg.order)


def _cell_diameter(region, n):
    if isinstance(region, (Rect, RectMinusDisc)):
        return region.cell_diameter(n)
    r = region.r if isinstance(region, Disc) else region.outer.r
    return 2 * np.sqrt(2) * r / n


def _derivatives(u, x, y, k):
    """``{(a, b): values}`` for all derivatives of total order ``k`` only."""
    if hasattr(u, "derivatives"):
        d = u.derivatives(x, y, k)
        return {ab: d[ab] for ab in derivs_of_order(k)}
    if k == 0:
        return {(0, 0): np.asarray(u(x, y), float)}
    if k == 1 and hasattr(u, "gradient"):
        g = u.gradient(x, y)
        return {(1, 0): g[..., 0], (0, 1): g[..., 1]}
    raise ValidationError(f"derivatives of order {k} not available for {u!r}")


def _tensor_sq(d, k):
    """Full tensor norm squared from derivatives of order ``k``."""
    return sum(comb(k, b) * d[(a, b)] ** 2 for a, b in derivs_of_order(k))


def interior_region(domain, r):
    """Points of the rectangle at distance greater than ``r`` from its boundary."""
    if r < 0:
        raise ValidationError("interior margin must be nonnegative")
    if isinstance(domain, Rect):
        return Rect(domain.x0 + r, domain.x1 - r, domain.y0 + r, domain.y1 - r)
    return Rect(r, domain.Lx - r, r, domain.Ly - r)


def l2_norm(u, region, cfg=NormConfig()):
    x, y, w = region_quadrature(region, cfg)
    v = np.asarray(u(x, y), float)
    return float(np.sqrt(max(w @ v ** 2, 0.0)) / cfg.rho0)


def hk_norm(u, k, region, cfg=NormConfig()):
    if not 0 <= k:
        raise ValidationError("k must be nonnegative")
    x, y, w = region_quadrature(region, cfg)
    total = 0.0
    for i in range(k + 1):
        total += cfg.rho0 ** (2 * i) * float(w @ _tensor_sq(_derivatives(u, x, y, i), i))
    return float(np.sqrt(max(total, 0.0)) / cfg.rho0)


def _ray_integral(u, k, px, py, dirs, region, delta, n_radial, s):
    """Inner integral over ``y`` for each outer point, shape ``(len(px),)``."""
    g, gw = np.polynomial.legendre.leggauss(n_radial)
    e = 2 - 2 * s
    ab = derivs_of_order(k)
    wts = np.array([comb(k, b) for _, b in ab], float)
    ux = _derivatives(u, px, py, k)
    U0 = np.stack([ux[i] for i in ab], -1)  # (N, m)
    dU = _derivatives(u, px, py, k + 1) if delta > 0 else None
    out = np.zeros(len(px))
    dth = 2 * np.pi / len(dirs)
    for ex, ey in dirs:
        a, b = region.ray_segments(px[:, None], py[:, None], ex, ey)
        a, b = a[:, 0, :], b[:, 0, :]
        if dU is not None:
            # Taylor zone: |grad^k u(x) - grad^k u(x+re)|^2 ~ r^2 |D_e grad^k u|^2
            slope = np.stack([ex * dU[(ai + 1, bi)] + ey * dU[(ai, bi + 1)] for ai, bi in ab], -1)
            lead = (slope ** 2) @ wts
            na, nb = np.minimum(a, delta), np.minimum(b, delta)
            out += dth * lead * ((nb ** e - na ** e) / e).sum(-1)
            a = np.maximum(a, delta)
            b = np.maximum(b, a)
        for j in range(a.shape[1]):
            aj, bj = a[:, j], b[:, j]
            live = bj > aj * (1 + 1e-14)
            if not live.any():
                continue
            la, lb = np.log(aj[live]), np.log(bj[live])
            t = 0.5 * (la + lb)[:, None] + 0.5 * (lb - la)[:, None] * g
            r = np.exp(t)
            qx = px[live, None] + r * ex
            qy = py[live, None] + r * ey
            uy = _derivatives(u, qx.ravel(), qy.ravel(), k)
            diff = np.stack([uy[i].reshape(r.shape) for i in ab], -1) - U0[live, None, :]
            f = (diff ** 2) @ wts * r ** (-2 * s)  # r^{-1-2s} dr = r^{-2s} dt
            out[live] += dth * (f @ gw) * 0.5 * (lb - la)
    return out


def fractional_seminorm(u, s, region, cfg=NormConfig(), k=0):
    """``[grad^k u]_s`` over ``region`` (both variables range over the region)."""
    if not 0 < s < 1:
        raise ValidationError(f"s must lie in (0, 1), got {s}")
    region = as_region(region)
    x, y, w = region_quadrature(region, cfg)
    delta = cfg.delta_cut if cfg.delta_cut is not None else _cell_diameter(region, cfg.n_cells)
    th = 2 * np.pi * (np.arange(cfg.n_theta) + 0.5) / cfg.n_theta
    dirs = list(zip(np.cos(th), np.sin(th)))
    total = 0.0
    for i in range(0, len(x), _CHUNK):
        sl = slice(i, i + _CHUNK)
        inner = _ray_integral(u, k, x[sl], y[sl], dirs, region, delta, cfg.n_radial, s)
        total += float(w[sl] @ inner)
    return float(np.sqrt(max(total, 0.0)))


def h_frac_norm(u, k, s, region, cfg=NormConfig()):
    """``||u||_{H^{k+s}} = ||u||_{H^k} + rho0^(k+s-1) [grad^k u]_s``."""
    return hk_norm(u, k, region, cfg) + cfg.rho0 ** (k + s - 1) * fractional_seminorm(u, s, region, cfg, k)


def frequency_ratio(w, region, cfg=NormConfig()):
    """``||w||_{H^1/2(U)} / ||w||_{L2(U)}``."""
    l2 = l2_norm(w, region, cfg)
    if not l2 > 0:
        raise DegenerateDataError("L2 norm of w vanishes on the region")
    return (l2 + cfg.rho0 ** -0.5 * fractional_seminorm(w, 0.5, region, cfg)) / l2


def sup_norm(u, region, cfg=NormConfig()):
    x, y, _ = region_quadrature(region, cfg)
    return float(np.max(np.abs(u(x, y))))


def kappa_admissibility(kappa, s, kbar, rho0=1.0, region=None, cfg=None):
    """Check ``kappa >= 0`` and ``||kappa||_inf + rho0^(s-1) [kappa]_s <= kbar / rho0``.

    The sup norm is sampled at the volume quadrature points of ``region``
    (default: the unit square).
    """
    cfg = cfg or NormConfig(rho0=rho0)
    region = as_region(region if region is not None else PlateDomain())
    xq, yq, _ = region_quadrature(region, cfg)
    vals = np.asarray(kappa(xq, yq), float)
    sup = float(np.max(np.abs(vals)))
    nonneg = bool(np.min(vals) >= 0)
    if np.ptp(vals) == 0:
        semi = 0.0
    else:
        semi = fractional_seminorm(kappa, s, region, cfg)
    total = sup + rho0 ** (s - 1) * semi
    ok = nonneg and total <= kbar / rho0 * (1 + 1e-12)
    return {"ok": bool(ok), "nonnegative": nonneg, "sup": sup, "seminorm": semi,
            "total": total, "bound": kbar / rho0}


def interpolation_diagnostic(w, s, region, cfg=NormConfig()):
    """Terms of the interpolation inequality between L2, H^6 and H^{6+s}.

    Needs sixth derivatives with a fractional modulus, so splines of degree
    at least 7.  Returns ``{"available": False}`` otherwise.
    """
    degree = getattr(getattr(w, "space", None), "degree", 0)
    if degree < 7:
        return {"available": False, "reason": f"spline degree {degree} < 7"}
    h6 = hk_norm(w, 6, region, cfg)
    h6s = h_frac_norm(w, 6, s, region, cfg)
    l2 = l2_norm(w, region, cfg)
    theta = 6 / (6 + s)
    log_c = np.log(h6) - theta * np.log(h6s) - (1 - theta) * np.log(l2)
    return {"available": True, "H6": h6, "H6s": h6s, "L2": l2, "log_C": float(log_c)}


def norm_record(name, region, value, cfg):
    return {"norm": name, "region": as_region(region).describe(), "value": float(value),
            "quadrature_meta": asdict(cfg)}


def norm_report(w, region, cfg=NormConfig(), s=0.5):
    """JSON-ready records for the standard norm suite of a deflection.

    A positive ``cfg.margin`` restricts a rectangular region to its interior.
    """
    if cfg.margin > 0 and isinstance(as_region(region), Rect):
        region = interior_region(as_region(region), cfg.margin)
    recs = [norm_record("L2", region, l2_norm(w, region, cfg), cfg)]
    for k in (1, 2, 3):
        recs.append(norm_record(f"H{k}", region, hk_norm(w, k, region, cfg), cfg))
    recs.append(norm_record(f"seminorm_s{s:g}", region, fractional_seminorm(w, s, region, cfg), cfg))
    recs.append(norm_record("frequency_ratio", region, frequency_ratio(w, region, cfg), cfg))
    return recs
