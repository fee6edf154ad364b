import json

import numpy as np
import pytest

from nanoplate.errors import ValidationError
from nanoplate.fields import ExprField, constant
from nanoplate.regions import Disc, Rect, RectMinusDisc
from nanoplate.ucp import (UCProbeConfig, ap_constant, probe, probe_centers, propagation_constant,
                           relative_drift)

U = RectMinusDisc(Rect(0, 1, 0, 1), Disc(0.5, 0.5, 0.1))


@pytest.fixture(scope="module")
def w_default(default_problem):
    from nanoplate.harness import make_kappa
    return default_problem.solve(make_kappa(default_problem))


def test_scaling_invariance(w_default):
    a = propagation_constant(w_default, (0.5, 0.5))
    b = propagation_constant(w_default * -4.0, (0.5, 0.5))
    assert b.value == pytest.approx(a.value, rel=1e-12)
    pa = ap_constant(w_default, (0.5, 0.5))
    pb = ap_constant(w_default * 4.0, (0.5, 0.5))
    assert pb.value == pytest.approx(pa.value, rel=1e-12)


def test_constant_function():
    cfg = UCProbeConfig(tau=0.05, margin_factor=1.0)
    t = probe(constant(2.0), cfg=cfg, region=U)
    for row in t.rows:
        assert all(v == pytest.approx(1.0, rel=1e-12) for v in row["ap"].values())
        assert row["energy_ratio"] == pytest.approx(np.pi * 0.05 ** 2 / U.area, rel=1e-10)


def test_probe_disc_equal_to_region():
    region = Disc(0.5, 0.5, 0.3)
    cfg = UCProbeConfig(tau=0.3, margin_factor=0.0)
    c = propagation_constant(ExprField("1 + x*y"), cfg=cfg, region=region, centers=[(0.5, 0.5)])
    assert c.value == pytest.approx(1.0, rel=1e-8)


def test_ap_bound_by_lower_bound():
    w = ExprField("2 + sin(3*x)*cos(2*y)")
    cfg = UCProbeConfig(tau=0.08, margin_factor=1.0)
    t = probe(w, cfg=cfg, region=U)
    for row in t.rows:
        cx, cy = row["center"]
        xd, yd, _ = Disc(cx, cy, 0.08).quadrature(6, 6)
        v = np.abs(w(xd, yd))
        assert max(row["ap"].values()) <= v.max() ** 2 / v.min() ** 2 * (1 + 1e-12)
        assert min(row["ap"].values()) >= 1 - 1e-12  # Jensen


def test_propagation_monotone_in_tau(w_default):
    centers = [(0.3, 0.3), (0.7, 0.25), (0.25, 0.75)]
    prev = np.inf
    for tau in (0.08, 0.05, 0.03):
        c = propagation_constant(w_default, (0.5, 0.5), UCProbeConfig(tau=tau), centers=centers)
        assert c.value <= prev
        prev = c.value


def test_sign_changing_discs_are_skipped():
    w = ExprField("x - 0.31")
    cfg = UCProbeConfig(tau=0.05, margin_factor=1.0, n_centers=9)
    res = ap_constant(w, cfg=cfg, region=U)
    assert res.skipped > 0 and np.isfinite(res.value)
    with pytest.raises(ValidationError):
        ap_constant(w, cfg=cfg, region=U, centers=[(0.3, 0.3)])


def test_eta_floor_caps_singular_product():
    w = ExprField("x - 0.3")
    cfg = UCProbeConfig(tau=0.05, margin_factor=0.0, etas=(1e-8, 1e-4))
    row = probe(w, cfg=cfg, region=U, centers=[(0.35, 0.3)]).rows[0]
    assert row["sign_change"] is False
    assert row["ap"]["1e-08"] >= row["ap"]["0.0001"]


def test_probe_centres_respect_margin():
    cfg = UCProbeConfig(tau=0.05)
    c = probe_centers(U, cfg)
    assert len(c) > 0
    assert np.all(U.boundary_distance(c[:, 0], c[:, 1]) >= 4 * 0.05 - 1e-12)


@pytest.mark.parametrize("kw", [{"tau": 0.0}, {"margin_factor": -1.0}, {"n_centers": 0},
                                {"etas": ()}, {"etas": (0.0,)}])
def test_config_validation(kw):
    with pytest.raises(ValidationError):
        UCProbeConfig(**kw)


def test_probe_errors(w_default):
    with pytest.raises(ValidationError):
        probe(w_default, (0.5, 0.5), p=1.0)
    with pytest.raises(ValidationError):
        probe(w_default, (0.5, 0.5), UCProbeConfig(tau=0.3))
    with pytest.raises(ValidationError):
        probe(w_default)


def test_table_output(tmp_path, w_default):
    t = probe(w_default, (0.5, 0.5))
    t.write(tmp_path / "table")
    data = json.loads((tmp_path / "table.json").read_text())
    assert len(data["rows"]) == len(t.rows)
    lines = (tmp_path / "table.csv").read_text().splitlines()
    assert lines[0].startswith("cx,cy,tau,energy_ratio") and len(lines) == len(t.rows) + 1


def test_relative_drift():
    assert relative_drift(1.0, 1.1) == pytest.approx(0.1 / 1.1)
