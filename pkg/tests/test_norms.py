import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nanoplate.discretization import PlateDomain
from nanoplate.errors import DegenerateDataError, ValidationError
from nanoplate.fields import ExprField, constant
from nanoplate.norms import (NormConfig, fractional_seminorm, frequency_ratio, h_frac_norm, hk_norm,
                             interior_region, interpolation_diagnostic, kappa_admissibility,
                             l2_norm, norm_report, sup_norm)
from nanoplate.regions import Disc, Rect

from oracles import SympyFunction, monte_carlo_seminorm_sq

UNIT = Rect(0, 1, 0, 1)


@settings(max_examples=15, deadline=None)
@given(rho0=st.floats(0.01, 100))
def test_unit_function_identity(rho0):
    dom = PlateDomain(rho0, rho0, rho0)
    assert l2_norm(constant(1.0), dom, NormConfig(rho0=rho0)) == pytest.approx(1.0, rel=1e-13)
    assert hk_norm(SympyFunction("1"), 3, dom, NormConfig(rho0=rho0)) == pytest.approx(1.0, rel=1e-13)


def test_l2_of_product_sines():
    u = ExprField("sin(pi*x)*sin(pi*y)")
    assert l2_norm(u, UNIT) == pytest.approx(0.5, rel=1e-10)


def test_hk_of_quadratic():
    u = SympyFunction("x**2")
    assert hk_norm(u, 1, UNIT) == pytest.approx(np.sqrt(1 / 5 + 4 / 3), rel=1e-13)
    assert hk_norm(u, 2, UNIT) == pytest.approx(np.sqrt(1 / 5 + 4 / 3 + 4), rel=1e-13)


def test_hk_counts_mixed_derivatives_twice():
    u = SympyFunction("x*y")
    # |grad^2 u|^2 = u_xy^2 + u_yx^2 = 2
    assert hk_norm(u, 2, UNIT) ** 2 == pytest.approx(1 / 9 + 2 / 3 + 2, rel=1e-13)


def test_hk_rho0_weights():
    cfg = NormConfig(rho0=2.0)
    u = SympyFunction("x")
    assert hk_norm(u, 1, UNIT, cfg) == pytest.approx(np.sqrt(1 / 3 + 4) / 2, rel=1e-13)


def test_seminorm_against_monte_carlo():
    u = ExprField("sin(pi*x)")
    quad = fractional_seminorm(u, 0.5, UNIT)
    mc = np.sqrt(monte_carlo_seminorm_sq(u, 0.5))
    assert quad == pytest.approx(mc, rel=0.05)


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_seminorm_other_orders(s):
    u = ExprField("x*y")
    quad = fractional_seminorm(u, s, UNIT)
    mc = np.sqrt(monte_carlo_seminorm_sq(u, s, n_pairs=2_000_000, seed=1))
    assert quad == pytest.approx(mc, rel=0.05)


def test_seminorm_of_gradient_matches_seminorm_of_function():
    # grad(x^2/2) = (x, 0), so [grad u]_s = [x]_s
    a = fractional_seminorm(SympyFunction("x**2/2"), 0.5, UNIT, k=1)
    b = fractional_seminorm(SympyFunction("x"), 0.5, UNIT)
    assert a == pytest.approx(b, rel=1e-12)


def test_seminorm_homogeneous_and_constant_free():
    u = ExprField("cos(2*x)*y")
    base = fractional_seminorm(u, 0.5, UNIT)
    assert fractional_seminorm(ExprField("3*cos(2*x)*y + 7"), 0.5, UNIT) == pytest.approx(3 * base, rel=1e-12)
    assert fractional_seminorm(constant(4.0), 0.5, UNIT) == 0


def test_seminorm_insensitive_to_cutoff():
    u = ExprField("sin(pi*x)*y")
    a = fractional_seminorm(u, 0.5, UNIT, NormConfig(delta_cut=0.02))
    b = fractional_seminorm(u, 0.5, UNIT, NormConfig(delta_cut=0.08))
    assert a == pytest.approx(b, rel=0.01)


def test_seminorm_on_disc():
    u = ExprField("x")
    disc = Disc(0.5, 0.5, 0.3)
    quad = fractional_seminorm(u, 0.5, disc, NormConfig(n_cells=12))
    rng = np.random.default_rng(3)
    # rejection-free oracle: polar sampling with the area Jacobian
    n = 2_000_000
    r1, r2 = 0.3 * np.sqrt(rng.uniform(size=(2, n)))
    t1, t2 = rng.uniform(0, 2 * np.pi, (2, n))
    dx = r1 * np.cos(t1) - r2 * np.cos(t2)
    dy = r1 * np.sin(t1) - r2 * np.sin(t2)
    mc = np.mean(dx ** 2 / (dx ** 2 + dy ** 2) ** 1.5) * (np.pi * 0.09) ** 2
    assert quad == pytest.approx(np.sqrt(mc), rel=0.05)


def test_h_frac_composition():
    u = ExprField("sin(pi*x)")
    cfg = NormConfig(rho0=2.0)
    expect = hk_norm(u, 0, UNIT, cfg) + 2.0 ** -0.5 * fractional_seminorm(u, 0.5, UNIT, cfg)
    assert h_frac_norm(u, 0, 0.5, UNIT, cfg) == pytest.approx(expect, rel=1e-14)


def test_frequency_ratio():
    u = ExprField("sin(pi*x)*sin(pi*y)")
    n = frequency_ratio(u, UNIT)
    assert n > 1
    assert frequency_ratio(ExprField("5*sin(pi*x)*sin(pi*y)"), UNIT) == pytest.approx(n, rel=1e-12)
    with pytest.raises(DegenerateDataError):
        frequency_ratio(constant(0.0), UNIT)


def test_kappa_admissibility():
    ok = kappa_admissibility(constant(1.0), 0.5, 2.0)
    assert ok["ok"] and ok["seminorm"] == 0 and ok["sup"] == 1.0
    assert not kappa_admissibility(constant(-0.1), 0.5, 2.0)["ok"]
    big = kappa_admissibility(ExprField("1.9 + 0.5*sin(6*x)"), 0.5, 2.0)
    assert not big["ok"]
    scaled = kappa_admissibility(constant(1.0), 0.5, 2.0, rho0=2.0)
    assert scaled["bound"] == 1.0 and scaled["ok"]


def test_sup_norm_and_interior():
    assert sup_norm(ExprField("x - 2"), UNIT) == pytest.approx(2.0, abs=0.05)
    r = interior_region(PlateDomain(), 0.1)
    assert (r.x0, r.x1, r.y0, r.y1) == pytest.approx((0.1, 0.9, 0.1, 0.9))
    with pytest.raises(ValidationError):
        interior_region(PlateDomain(), -0.1)
    with pytest.raises(ValidationError):
        l2_norm(constant(1.0), interior_region(PlateDomain(), 0.6))


@pytest.mark.parametrize("kw", [{"rho0": 0}, {"n_cells": 0}, {"delta_cut": -1.0}, {"margin": -1}])
def test_norm_config_validation(kw):
    with pytest.raises(ValidationError):
        NormConfig(**kw)


def test_seminorm_order_validation():
    with pytest.raises(ValidationError):
        fractional_seminorm(constant(1.0), 1.0, UNIT)


def test_interpolation_diagnostic_needs_degree(default_problem):
    w = default_problem.solve(0.4)
    assert interpolation_diagnostic(w, 0.5, UNIT)["available"] is False


def test_norm_report_records(default_problem):
    w = default_problem.solve(0.4)
    cfg = NormConfig(n_cells=8, n_theta=16, n_radial=8, margin=0.1)
    recs = norm_report(w, default_problem.domain, cfg)
    assert [r["norm"] for r in recs] == ["L2", "H1", "H2", "H3", "seminorm_s0.5", "frequency_ratio"]
    assert all(set(r) == {"norm", "region", "value", "quadrature_meta"} for r in recs)
    assert recs[0]["region"]["bounds"] == pytest.approx([0.1, 0.9, 0.1, 0.9])
    vals = [r["value"] for r in recs[:4]]
    assert vals == sorted(vals)
