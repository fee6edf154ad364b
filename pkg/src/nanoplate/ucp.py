"""Empirical unique-continuation constants of a deflection.

Two quantities are probed on discs ``B = B_{tau rho0}(x)`` inside a region
``U`` that avoids the load point:

* local energy fraction ``int_B w^2 / int_U w^2``; its minimum over the
  probe centres is the propagation constant;
* the Muckenhoupt-type product
  ``mean_B(w^2) * mean_B(|w|^(-2/(p-1)))^(p-1)``; its maximum is the
  A_p constant.

Negative powers of ``|w|`` are regularized by flooring ``|w|`` at
``eta * max_U |w|``; the A_p constant is reported for several ``eta``.
"""
import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .regions import Disc, Rect, RectMinusDisc


@dataclass(frozen=True)
class UCProbeConfig:
    tau: float = 0.05
    margin_factor: float = 4.0
    exclude_radius: float | None = None
    n_centers: int = 13
    etas: tuple = (1e-8, 1e-6, 1e-4)
    disc_n: int = 6
    disc_order: int = 6
    region_n: int = 24
    region_order: int = 4
    rho0: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if self.margin_factor < 0:
            raise ValidationError("margin factor must be nonnegative")
        if self.n_centers < 1:
            raise ValidationError("need at least one probe centre per direction")
        if not self.etas or min(self.etas) <= 0:
            raise ValidationError("eta floors must be positive")

    @property
    def radius(self):
        return self.tau * self.rho0


def default_region(w, P0, radius):
    dom = w.space.domain
    return RectMinusDisc(Rect(0, dom.Lx, 0, dom.Ly), Disc(P0[0], P0[1], radius))


def probe_centers(region, cfg):
    """Grid centres whose probe disc keeps distance ``margin_factor * tau * rho0`` from the boundary."""
    if isinstance(region, RectMinusDisc):
        x0, x1, y0, y1 = region.rect.x0, region.rect.x1, region.rect.y0, region.rect.y1
    elif isinstance(region, Rect):
        x0, x1, y0, y1 = region.x0, region.x1, region.y0, region.y1
    elif isinstance(region, Disc):
        x0, x1, y0, y1 = region.cx - region.r, region.cx + region.r, region.cy - region.r, region.cy + region.r
    else:
        raise ValidationError(f"unsupported probe region {region!r}")
    n = cfg.n_centers
    xs = x0 + (x1 - x0) * (np.arange(n) + 0.5) / n
    ys = y0 + (y1 - y0) * (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(xs, ys)
    X, Y = X.ravel(), Y.ravel()
    need = max(cfg.margin_factor * cfg.radius, cfg.radius)
    keep = region.boundary_distance(X, Y) >= need * (1 - 1e-12)
    return np.stack([X[keep], Y[keep]], axis=1)


@dataclass
class ProbeTable:
    region: dict
    tau: float
    total_energy: float
    w_max: float
    rows: list = field(default_factory=list)

    def to_json(self):
        return {"region": self.region, "tau": self.tau, "total_energy": self.total_energy,
                "w_max": self.w_max, "rows": self.rows}

    def write(self, stem):
        stem = Path(stem)
        stem.with_suffix(".json").write_text(json.dumps(self.to_json(), sort_keys=True, indent=2))
        etas = sorted({k for r in self.rows for k in r["ap"]}, key=float)
        with stem.with_suffix(".csv").open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["cx", "cy", "tau", "energy_ratio", "sign_change", "p"]
                        + [f"ap_eta_{e}" for e in etas])
            for r in self.rows:
                wr.writerow([repr(r["center"][0]), repr(r["center"][1]), repr(self.tau),
                             repr(r["energy_ratio"]), int(r["sign_change"]), r["p"]]
                            + [repr(r["ap"][e]) for e in etas])


def probe(w, P0=None, cfg=UCProbeConfig(), p=2.0, region=None, centers=None):
    """Evaluate local energy ratios and A_p products on every probe disc."""
    if not p > 1:
        raise ValidationError("A_p exponent must exceed 1")
    if region is None:
        if P0 is None:
            raise ValidationError("need P0 or an explicit region")
        r_ex = cfg.exclude_radius if cfg.exclude_radius is not None else 0.1 * cfg.rho0
        region = default_region(w, P0, r_ex)
    if centers is None:
        centers = probe_centers(region, cfg)
    centers = np.atleast_2d(np.asarray(centers, float))
    if centers.size == 0:
        raise ValidationError("no admissible probe centres; reduce tau or the margin")

    xu, yu, wu = region.quadrature(cfg.region_n, cfg.region_order)
    vu = w(xu, yu)
    total = float(wu @ vu ** 2)
    if not total > 0:
        raise ValidationError("w vanishes on the probe region")
    wmax = float(np.max(np.abs(vu)))
    q = 2.0 / (p - 1)
    table = ProbeTable(region.describe(), cfg.tau, total, wmax)
    for cx, cy in centers:
        xd, yd, wd = Disc(cx, cy, cfg.radius).quadrature(cfg.disc_n, cfg.disc_order)
        vd = w(xd, yd)
        area = wd.sum()
        energy = float(wd @ vd ** 2)
        sign_change = bool(vd.min() < 0 < vd.max())
        ap = {}
        for eta in cfg.etas:
            floor = eta * wmax
            with np.errstate(over="ignore", divide="ignore"):
                neg = wd @ np.maximum(np.abs(vd), floor) ** (-q) / area
                val = (energy / area) * neg ** (p - 1)
            ap[repr(float(eta))] = float(val) if np.isfinite(val) else float("inf")
        table.rows.append({"center": [float(cx), float(cy)], "energy_ratio": energy / total,
                           "sign_change": sign_change, "p": float(p), "ap": ap})
    return table


@dataclass
class UCConstant:
    value: float
    center: list
    table: ProbeTable
    by_eta: dict = field(default_factory=dict)
    skipped: int = 0

    def summary(self):
        return {"value": self.value, "center": self.center, "by_eta": self.by_eta,
                "skipped": self.skipped, "n_probes": len(self.table.rows), "tau": self.table.tau}


def propagation_constant(w, P0=None, cfg=UCProbeConfig(), region=None, centers=None, table=None):
    """Minimum over probe discs of ``int_B w^2 / int_U w^2``."""
    table = table or probe(w, P0, cfg, region=region, centers=centers)
    ratios = np.array([r["energy_ratio"] for r in table.rows])
    i = int(np.argmin(ratios))
    return UCConstant(float(ratios[i]), table.rows[i]["center"], table)


def ap_constant(w, P0=None, cfg=UCProbeConfig(), p=2.0, region=None, centers=None, table=None):
    """Maximum A_p product over probe discs on which ``w`` keeps one sign.

    ``value`` uses the smallest floor in ``cfg.etas``; ``by_eta`` lists all.
    """
    table = table or probe(w, P0, cfg, p=p, region=region, centers=centers)
    good = [r for r in table.rows if not r["sign_change"]]
    skipped = len(table.rows) - len(good)
    if not good:
        raise ValidationError("every probe disc meets the nodal set of w")
    by_eta = {}
    worst = {}
    for key in good[0]["ap"]:
        vals = np.array([r["ap"][key] for r in good])
        j = int(np.argmax(vals))
        by_eta[key] = float(vals[j])
        worst[key] = good[j]["center"]
    key0 = min(by_eta, key=float)
    return UCConstant(by_eta[key0], worst[key0], table, by_eta, skipped)


def relative_drift(a, b):
    return abs(a - b) / max(abs(a), abs(b))
