import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nanoplate.errors import (InvalidMaterialError, InvalidTensorSplitError, SingularMaterialError)
from nanoplate.fields import ExprField
from nanoplate.material import (MaterialParams, apply_rank4, apply_rank6, bending_stiffness,
                                build_tensors, derived_coefficients, lame_to_engineering,
                                reduced_forms, scale_coefficients, verify_convexity)

from oracles import loop4, loop6, oracle_P, oracle_Ph, oracle_Q, sym3

def rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


@pytest.mark.parametrize("mu, lam, E, nu", [(1, 1, 2.5, 0.25), (1, 0, 2, 0), (2, 3, 5.2, 0.3)])
def test_lame_to_engineering(mu, lam, E, nu):
    assert lame_to_engineering(mu, lam) == pytest.approx((E, nu), rel=1e-15)


@pytest.mark.parametrize("E, nu, t, B", [(12, 0, 1, 1.0), (12, 0.5, 1, 4 / 3),
                                         (2.5, 0.25, 0.1, 0.001 * 2.5 / (12 * 0.9375))])
def test_bending_stiffness(E, nu, t, B):
    assert bending_stiffness(E, nu, t) == pytest.approx(B, rel=1e-14)


def test_bending_stiffness_singular():
    with pytest.raises(SingularMaterialError):
        bending_stiffness(1.0, 1.0, 1.0)


@pytest.mark.parametrize("mu, lam", [(0.0, 1.0), (1.0, -1.0)])
def test_lame_rejects_nonpositive(mu, lam):
    with pytest.raises(InvalidMaterialError):
        lame_to_engineering(mu, lam)


def test_scale_coefficients_unit():
    m = MaterialParams.constant(1.0, 1.0, 1.0, 1.0)
    assert scale_coefficients(m, (0.3, 0.4)) == pytest.approx((2, 2 / 15, 1, 1 / 6, 1 / 30), rel=1e-14)


def test_scale_coefficient_a1():
    m = MaterialParams.constant(15.0, 1.0, 1.0, 2.0, l1=1.0)
    assert scale_coefficients(m, (0.5, 0.5))[1] == pytest.approx(2.0, rel=1e-14)


def test_coefficient_lower_bounds():
    alpha0 = 0.05
    m = MaterialParams.constant(alpha0, 0.1, 0.2, 0.3, l1=0.4, l2=0.5, alpha0=alpha0)
    a0, a1, a2, b0, b1 = scale_coefficients(m, (0.5, 0.5))
    t, l = m.t, m.l
    for a in (a0, a1, a2):
        assert a >= t * l ** 2 * 2 / 15 * alpha0 * (1 - 1e-14)
    for b in (b0, b1):
        assert b >= t ** 3 * l ** 2 / 30 * alpha0 * (1 - 1e-14)


def test_invalid_parameters():
    with pytest.raises(InvalidMaterialError):
        MaterialParams.constant(1.0, 1.0, -0.1, 0.1)
    m = MaterialParams.constant(1.0, -0.9, 0.1, 0.1, gamma0=0.5)
    with pytest.raises(InvalidMaterialError):
        m.lame(np.array([0.5]), np.array([0.5]))


def test_tensors_match_brute_force(rng):
    for _ in range(100):
        mu, lam = rng.uniform(0.1, 5), rng.uniform(0, 5)
        t, l0, l1, l2 = rng.uniform(0.05, 1, 4)
        m = MaterialParams.constant(mu, lam, t, l0, l1, l2)
        c = derived_coefficients(m, np.array(0.5), np.array(0.5))
        T = build_tensors(m, (0.5, 0.5))
        b1 = float(c.b1)
        assert rel(T.P, oracle_P(float(c.B_stiff), float(c.nu))) <= 1e-13
        assert rel(T.Ph, oracle_Ph(float(c.a0), float(c.a1), float(c.a2))) <= 1e-13
        assert rel(T.Q, oracle_Q(float(c.b0), b1, T.q8, T.q9)) <= 1e-13
        assert 2 * (T.q8 + 2 * T.q9) == pytest.approx(5 * b1, rel=1e-14)
        A = rng.standard_normal((2, 2))
        B = rng.standard_normal((2, 2, 2))
        assert rel(apply_rank4(T.P + T.Ph, A), loop4(T.P + T.Ph, A)) <= 1e-13
        assert rel(apply_rank6(T.Q, B), loop6(T.Q, B)) <= 1e-13


def test_major_symmetry_and_symmetric_action(material, rng):
    T = build_tensors(material, (0.2, 0.7))
    for P in (T.P, T.Ph):
        assert np.array_equal(P, P.transpose(2, 3, 0, 1))
        # literal delta form: minor symmetry only in the action on symmetric A
        A = rng.standard_normal((2, 2))
        A = A + A.T
        PA = apply_rank4(P, A)
        assert np.allclose(PA, PA.T, rtol=0, atol=1e-15 * np.abs(PA).max())
        assert np.allclose(apply_rank4(P.transpose(1, 0, 2, 3), A), PA, rtol=1e-15)


def test_q_split_invariance(rng):
    m = MaterialParams.constant(1.3, 0.7, 0.3, 0.2, 0.25, 0.15)
    b1 = float(derived_coefficients(m, np.array(0.5), np.array(0.5)).b1)
    ref = build_tensors(m, (0.5, 0.5))
    for _ in range(100):
        q8 = rng.uniform(-3, 3) * b1
        T = build_tensors(m, (0.5, 0.5), q_split=(q8, (5 * b1 - 2 * q8) / 4))
        B = sym3(rng.standard_normal((2, 2, 2)))
        assert rel(apply_rank6(T.Q, B), apply_rank6(ref.Q, B)) <= 1e-12


def test_split_constraint_enforced(material):
    with pytest.raises(InvalidTensorSplitError):
        build_tensors(material, (0.5, 0.5), q_split=(1.0, 1.0))


def test_nu_zero_gives_scaled_identity(rng):
    m = MaterialParams.constant(1.0, 0.0, 0.5, 0.1)
    T = build_tensors(m, (0.5, 0.5))
    A = rng.standard_normal((2, 2))
    B = float(derived_coefficients(m, np.array(0.5), np.array(0.5)).B_stiff)
    assert np.allclose(apply_rank4(T.P, A), B * A, rtol=1e-14, atol=0)


def test_ph_on_identity(material):
    T = build_tensors(material, (0.5, 0.5))
    a0, a1, a2, _, _ = scale_coefficients(material, (0.5, 0.5))
    assert np.allclose(apply_rank4(T.Ph, np.eye(2)), (2 * a0 + 3 * a1) * np.eye(2), rtol=1e-14)


def test_q_on_symmetric_argument(rng, material):
    T = build_tensors(material, (0.5, 0.5))
    _, _, _, b0, b1 = scale_coefficients(material, (0.5, 0.5))
    B = sym3(rng.standard_normal((2, 2, 2)))
    tr = np.einsum("llk->k", B)
    I = np.eye(2)
    expect = ((b0 - 3 * b1) / 3 * (np.einsum("ij,k->ijk", I, tr) + np.einsum("ik,j->ijk", I, tr)
                                   + np.einsum("jk,i->ijk", I, tr)) + 5 * b1 * B)
    assert rel(apply_rank6(T.Q, B), expect) <= 1e-13
    # trace-free part: the trace terms drop out
    Btf = B - (np.einsum("ij,k->ijk", I, tr) + np.einsum("ik,j->ijk", I, tr)
               + np.einsum("jk,i->ijk", I, tr)) / 4
    assert np.allclose(np.einsum("llk->k", Btf), 0, atol=1e-14)
    assert rel(apply_rank6(T.Q, Btf), 5 * b1 * Btf) <= 1e-13


def test_zero_argument(material):
    T = build_tensors(material, (0.5, 0.5))
    assert np.all(apply_rank6(T.Q, np.zeros((2, 2, 2))) == 0)


@settings(max_examples=20, deadline=None)
@given(mu=st.floats(0.01, 100), lam=st.floats(0, 100), t=st.floats(0.01, 1), l0=st.floats(0.01, 1),
       l1=st.floats(0.01, 1), l2=st.floats(0.01, 1))
def test_convexity_random_draws(mu, lam, t, l0, l1, l2):
    m = MaterialParams.constant(mu, lam, t, l0, l1, l2)
    xi_p, xi_q = verify_convexity(build_tensors(m, (0.5, 0.5)), m)
    assert xi_p > 0 and xi_q > 0


def test_convexity_homogeneous_in_mu():
    m1 = MaterialParams.constant(1.0, 1.0, 0.3, 0.2)
    m3 = MaterialParams.constant(3.0, 3.0, 0.3, 0.2)
    x1 = verify_convexity(build_tensors(m1, (0.5, 0.5)), m1)
    x3 = verify_convexity(build_tensors(m3, (0.5, 0.5)), m3)
    assert x3 == pytest.approx((3 * x1[0], 3 * x1[1]), rel=1e-12)


def test_convexity_monotone_in_mu():
    prev = (0.0, 0.0)
    for mu in (0.5, 1.0, 2.0, 4.0):
        m = MaterialParams.constant(mu, 1.0, 0.3, 0.2)
        xi = verify_convexity(build_tensors(m, (0.5, 0.5)), m)
        assert xi[0] >= prev[0] and xi[1] >= prev[1]
        prev = xi


def test_reduced_forms_match_full_tensors(material, rng):
    x = np.array([0.3])
    y = np.array([0.6])
    M2, M3 = reduced_forms(material, x, y)
    T = build_tensors(material, (0.3, 0.6))
    H = rng.standard_normal((2, 2))
    H = H + H.T
    G = sym3(rng.standard_normal((2, 2, 2)))
    h = np.array([H[0, 0], H[0, 1], H[1, 1]])
    g = np.array([G[0, 0, 0], G[0, 0, 1], G[0, 1, 1], G[1, 1, 1]])
    assert h @ M2[0] @ h == pytest.approx(np.sum(apply_rank4(T.P + T.Ph, H) * H), rel=1e-13)
    assert g @ M3[0] @ g == pytest.approx(np.sum(apply_rank6(T.Q, G) * G), rel=1e-13)


def test_variable_lame_fields():
    m = MaterialParams(t=0.1, l0=0.1, l1=0.1, l2=0.1, mu_field=ExprField("1 + x"),
                       lambda_field=ExprField("0.5*y"))
    c = derived_coefficients(m, np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert c.a2[1] == pytest.approx(2 * c.a2[0])
