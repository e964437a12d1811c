"""Gamma-algebra identities and the closed-form matrix exponential."""

import numpy as np
import pytest

from sqf.gammas import (
    GAMMA1,
    GAMMA2,
    GAMMA3,
    ID2,
    Momentum2,
    build_gamma,
    gamma_invariant_residuals,
    mat_exp,
    slash,
)


def taylor_exp(a, t, terms=30):
    """Scaling-and-squaring Taylor oracle for exp(-a t)."""
    a = np.asarray(a, dtype=complex) * t
    s = 0
    while np.max(np.abs(a)) > 0.5:
        a = a / 2.0
        s += 1
    acc = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, terms + 1):
        term = term @ (-a) / k
        acc = acc + term
    for _ in range(s):
        acc = acc @ acc
    return acc


def test_pauli_representation_exact():
    rep = build_gamma()
    assert np.array_equal(rep.gamma1, np.array([[0, 1], [1, 0]], dtype=complex))
    assert np.array_equal(rep.gamma2, np.array([[0, -1j], [1j, 0]], dtype=complex))
    assert np.array_equal(rep.gamma3, np.array([[1, 0], [0, -1]], dtype=complex))


def test_gamma_invariants_exactly_zero():
    res = gamma_invariant_residuals()
    assert res, "no residuals computed"
    for name, val in res.items():
        assert val == 0.0, name


def test_gamma1_gamma2_product():
    # gamma1 gamma2 = i gamma3
    assert np.array_equal(GAMMA1 @ GAMMA2, 1j * GAMMA3)
    assert np.array_equal(GAMMA1 @ GAMMA2 + GAMMA2 @ GAMMA1, np.zeros((2, 2)))


def test_ring_axioms_random_triples():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
                   for _ in range(3))
        assert np.allclose((a @ b) @ c, a @ (b @ c), atol=1e-12)
        assert np.allclose((a @ b).conj().T, b.conj().T @ a.conj().T, atol=1e-14)


def test_slash_basics():
    assert np.array_equal(slash((0.0, 0.0)), np.zeros((2, 2)))
    assert np.array_equal(slash((1.0, 0.0)), GAMMA1)
    s = slash((3.0, 4.0))
    assert np.allclose(s @ s, 25.0 * ID2, atol=1e-13)
    assert np.allclose(s, s.conj().T, atol=0)


def test_slash_square_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        p = Momentum2(*rng.normal(scale=3.0, size=2))
        s = slash(p)
        assert np.allclose(s @ s, p.norm2 * ID2, atol=1e-12 * max(1.0, p.norm2))


def test_momentum_rejects_nonfinite():
    with pytest.raises(ValueError):
        Momentum2(np.inf, 0.0)


def test_mat_exp_scalar_and_identity():
    m = 1.3
    assert np.allclose(mat_exp(m * ID2, 1.0), np.exp(-m) * ID2, atol=1e-15)
    assert np.array_equal(mat_exp(np.zeros((2, 2)), 2.7), ID2)


def test_mat_exp_against_taylor():
    a = ID2 + 1j * slash((1.0, 0.0))
    assert np.allclose(mat_exp(a, 0.5), taylor_exp(a, 0.5), atol=1e-12)
    rng = np.random.default_rng(5)
    for _ in range(60):
        coef = rng.normal(size=4) + 1j * rng.normal(size=4)
        a = coef[0] * ID2 + coef[1] * GAMMA1 + coef[2] * GAMMA2 + coef[3] * GAMMA3
        t = rng.uniform(0, 2)
        assert np.allclose(mat_exp(a, t), taylor_exp(a, t), atol=1e-11)


def test_mat_exp_semigroup():
    rng = np.random.default_rng(9)
    for _ in range(50):
        coef = rng.normal(size=4)
        a = coef[0] * ID2 + coef[1] * GAMMA1 + coef[2] * GAMMA2 + coef[3] * GAMMA3
        s, t = rng.uniform(0, 2, size=2)
        assert np.allclose(
            mat_exp(a, s) @ mat_exp(a, t), mat_exp(a, s + t), atol=1e-12
        )


def test_mat_exp_rejects_nonfinite():
    bad = np.array([[np.nan, 0], [0, 1]], dtype=complex)
    with pytest.raises(ValueError):
        mat_exp(bad, 1.0)
    with pytest.raises(ValueError):
        mat_exp(ID2, np.inf)
