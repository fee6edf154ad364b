import numpy as np
import pytest

from nanoplate.discretization import build_space
from nanoplate.errors import DegenerateDataError, InsufficientSamplesError, ValidationError
from nanoplate.fields import ExprField
from nanoplate.inverse import (Measurement, admissible_tests, choose_alpha, data_residual,
                               kappa_error, measure, project_measurement, reconstruct_kappa,
                               sample_grid, weak_form_residual)
from nanoplate.solver import Deflection, LoadCase, check_load_neighborhood

TRUTH = "0.4 + 0.15*sin(pi*x)*cos(pi*y) + 0.1*x*y"


@pytest.fixture(scope="module")
def truth_case(default_problem):
    P = default_problem
    kt = P.basis.interpolate(ExprField(TRUTH))
    w = P.solve(kt)
    nb = check_load_neighborhood(w, P.load)
    return kt, w, nb.sigma_bar_emp / 2


def recon(P, w, r_ex, **kw):
    args = dict(sigma=P.sigma, kbar=P.kbar, exclude_radius=r_ex, K=P.K)
    args.update(kw)
    return reconstruct_kappa(w, P.load, P.material, P.basis, **args)


def test_projection_recovers_own_space(space16, rng):
    c = rng.standard_normal(space16.n)
    w = Deflection(space16, c)
    m = measure(w, n=40)
    fit = project_measurement(m, space16)
    assert np.abs(fit.coefs - c).max() <= 1e-10 * np.abs(c).max()


def test_projection_within_discretisation_error(default_problem, truth_case):
    _, w, _ = truth_case
    coarse = build_space(default_problem.domain, 5, 16)
    fit = project_measurement(measure(w, n=48), coarse)
    x, y = np.random.default_rng(0).uniform(0.1, 0.9, (2, 500))
    assert np.abs(fit(x, y) - w(x, y)).max() <= 1e-3 * np.abs(w(x, y)).max()


def test_fit_residual_doubles_with_noise(space16, rng):
    w = Deflection(space16, rng.standard_normal(space16.n))
    ratios = []
    for seed in range(10):
        r1 = project_measurement(measure(w, 40, eps=1e-3, seed=seed), space16, lam=0.0).meta["fit_rms"]
        r2 = project_measurement(measure(w, 40, eps=2e-3, seed=seed), space16, lam=0.0).meta["fit_rms"]
        ratios.append(r2 / r1)
    assert np.mean(ratios) == pytest.approx(2.0, rel=0.2)


def test_discrepancy_projection_matches_noise(space16, rng):
    w = Deflection(space16, rng.standard_normal(space16.n))
    m = measure(w, 40, eps=1e-2, seed=4)
    fit = project_measurement(m, space16)
    assert fit.meta["fit_rms"] == pytest.approx(m.noise_std, rel=0.05)


def test_projection_needs_samples(space16):
    w = Deflection(space16, np.zeros(space16.n))
    with pytest.raises(InsufficientSamplesError):
        project_measurement(measure(w, n=5), space16)


def test_measurement_csv_roundtrip(tmp_path, space16, rng):
    m = measure(Deflection(space16, rng.standard_normal(space16.n)), 6, eps=1e-4, seed=7, sigma=0.1)
    m.to_csv(tmp_path / "m.csv")
    back = Measurement.from_csv(tmp_path / "m.csv")
    assert np.array_equal(back.values, m.values) and np.array_equal(back.points, m.points)
    assert (back.eps, back.seed, back.sigma) == (1e-4, 7, 0.1)


def test_sample_grid_covers_interior(domain):
    pts = sample_grid(domain, 48)
    assert pts.min() < 0.125 and pts.max() > 0.875 and len(pts) == 48 ** 2


def test_closed_loop_in_span(default_problem, truth_case):
    kt, w, r_ex = truth_case
    res = recon(default_problem, w, r_ex)
    assert kappa_error(res.kappa, kt, default_problem.domain, default_problem.sigma) <= 1e-6


def test_closed_loop_smooth_truth(default_problem, truth_case):
    P = default_problem
    _, _, r_ex = truth_case
    truth = ExprField(TRUTH)
    res = recon(P, P.solve(truth), r_ex)
    assert kappa_error(res.kappa, truth, P.domain, P.sigma) <= 1e-2


def test_include_mode_agrees(default_problem, truth_case):
    kt, w, _ = truth_case
    res = recon(default_problem, w, None, mode="include")
    assert kappa_error(res.kappa, kt, default_problem.domain, default_problem.sigma) <= 1e-6


def test_zero_truth_gives_zero(default_problem, truth_case):
    P = default_problem
    _, _, r_ex = truth_case
    res = recon(P, P.solve(0.0), r_ex)
    assert np.abs(res.kappa.coefs).max() <= 1e-8


def test_reported_residual_is_consistent(default_problem, truth_case):
    kt, w, r_ex = truth_case
    noisy = w + Deflection(w.space, 1e-4 * np.random.default_rng(1).standard_normal(w.space.n))
    res = recon(default_problem, noisy, r_ex, alpha=1e-6)
    again = weak_form_residual(res, noisy, default_problem.load, default_problem.K)
    assert again == pytest.approx(res.residual, rel=1e-10, abs=1e-10)


def test_equivariant_under_load_scaling(default_problem, truth_case):
    P = default_problem
    kt, w, r_ex = truth_case
    noisy = w + Deflection(w.space, 1e-4 * np.random.default_rng(2).standard_normal(w.space.n))
    a = recon(P, noisy, r_ex, alpha=1e-8, mode="include")
    big = LoadCase(P.load.P0, 3.0 * P.load.f_bar, P.load.d)
    b = reconstruct_kappa(noisy * 3.0, big, P.material, P.basis, alpha=1e-8, sigma=P.sigma,
                          kbar=P.kbar, mode="include", K=P.K)
    assert np.allclose(a.kappa.coefs, b.kappa.coefs, rtol=1e-8, atol=1e-10)


def test_clipping_to_bounds(default_problem, truth_case):
    kt, w, r_ex = truth_case
    res = recon(default_problem, w, r_ex, kbar=0.45)
    assert res.kappa.coefs.min() >= 0 and res.kappa.coefs.max() <= 0.45
    assert res.clipped > 0 and res.kappa_raw.max() > 0.45


def test_mask_fraction_grows_towards_boundary(default_problem, truth_case):
    _, w, r_ex = truth_case
    inner = recon(default_problem, w, r_ex, sigma=0.25, mask_tol=0.05)
    outer = recon(default_problem, w, r_ex, sigma=0.125, mask_tol=0.05)
    assert outer.mask_fraction >= inner.mask_fraction


def test_reconstruct_rejects(default_problem, truth_case):
    _, w, r_ex = truth_case
    with pytest.raises(ValidationError):
        recon(default_problem, w, r_ex, alpha=0.0)
    with pytest.raises(ValidationError):
        recon(default_problem, w, None)
    with pytest.raises(DegenerateDataError):
        recon(default_problem, w, r_ex, sigma=0.45)
    with pytest.raises(DegenerateDataError):
        recon(default_problem, w * 0.0, r_ex)


def test_admissible_tests_inside_interior(default_problem):
    S = default_problem.space
    T = admissible_tests(S, 0.125, (0.5, 0.5), 0.05)
    box = S.active_support()[T]
    assert box[:, 0].min() >= 0.125 - 1e-12 and box[:, 1].max() <= 0.875 + 1e-12
    assert len(T) < len(admissible_tests(S, 0.125))


def test_choose_alpha_noiseless_picks_smallest(default_problem, truth_case):
    P = default_problem
    kt, w, r_ex = truth_case
    ch = choose_alpha([1e-6, 1e-14, 1e-10], w, P.load, P.material, P.basis, 0.0, K=P.K,
                      sigma=P.sigma, kbar=P.kbar, exclude_radius=r_ex)
    assert ch.alpha == 1e-14 and ch.alphas == [1e-14, 1e-10, 1e-6]
    assert len(ch.residuals) == 3 and isinstance(ch.monotone, bool)


def test_choose_alpha_rejects_empty(default_problem, truth_case):
    P = default_problem
    with pytest.raises(ValidationError):
        choose_alpha([], truth_case[1], P.load, P.material, P.basis, 0.0)


def test_data_residual_vanishes_on_exact_data(default_problem, truth_case):
    P = default_problem
    kt, w, r_ex = truth_case
    res = recon(P, w, r_ex)
    assert data_residual(res, w, P.load, P.K) <= 1e-8 * np.abs(w.coefs).max()
