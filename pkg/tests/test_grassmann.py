"""Exact Grassmann algebra: products, derivatives, Berezin integrals."""

import random
from fractions import Fraction

import pytest

from sqf.grassmann import (
    GrassmannElement as GE,
    Polynomial,
    Side,
    berezin,
    derive,
    exp_nilpotent,
    gaussian_berezin,
)


def gen(i, n):
    return GE.generator(i, n)


def random_element(rng, ngen, max_terms=6, grade=None):
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        k = grade if grade is not None else rng.randint(0, ngen)
        idx = tuple(sorted(rng.sample(range(ngen), k)))
        terms[idx] = terms.get(idx, 0) + rng.randint(-4, 4)
    return GE(ngen, terms)


def brute_gaussian(a, tbar, t, etabar=None, eta=None, ngen=None):
    """Direct expansion: exponentiate the integrand, then integrate."""
    n = len(tbar)
    expo = GE(ngen)
    for i in range(n):
        for j in range(n):
            if a[i][j] != 0:
                expo = expo - (
                    GE.generator(tbar[i], ngen) * GE.generator(t[j], ngen)
                ).scale(a[i][j])
    if eta is not None:
        for i in range(n):
            expo = expo + GE.generator(tbar[i], ngen) * eta[i]
            expo = expo + etabar[i] * GE.generator(t[i], ngen)
    measure = []
    for x, y in zip(tbar, t):
        measure.extend((x, y))
    return berezin(exp_nilpotent(expo), measure)


# -- product structure -------------------------------------------------------


def test_anticommutation_and_nilpotency():
    n = 4
    assert (gen(0, n) * gen(1, n) + gen(1, n) * gen(0, n)).is_zero()
    assert (gen(0, n) * gen(0, n)).is_zero()


def test_four_term_expansion():
    n = 2
    one = GE.scalar(1, n)
    e = (one + gen(0, n)) * (one + gen(1, n))
    assert e == GE(n, {(): 1, (0,): 1, (1,): 1, (0, 1): 1})


def test_mul_associative_random():
    rng = random.Random(17)
    n = 6
    for _ in range(40):
        a, b, c = (random_element(rng, n) for _ in range(3))
        assert (a * b) * c == a * (b * c)


def test_mismatched_generator_counts():
    with pytest.raises(ValueError):
        gen(0, 2) * gen(0, 3)


def test_scalar_part_of_odd_product_is_zero():
    n = 5
    prod = gen(0, n) * gen(1, n) * gen(2, n)
    assert prod.scalar_part() == 0
    assert prod.parity() == 1


# -- derivatives -------------------------------------------------------------


def test_left_right_derivative_signs():
    n = 2
    a = gen(0, n) * gen(1, n)
    assert derive(a, 1, Side.LEFT) == GE(n, {(0,): -1})
    assert derive(a, 1, Side.RIGHT) == GE(n, {(0,): 1})


def test_left_derivatives_anticommute():
    n = 2
    a = gen(0, n) * gen(1, n)
    lhs = derive(derive(a, 1, Side.LEFT), 0, Side.LEFT) + derive(
        derive(a, 0, Side.LEFT), 1, Side.LEFT
    )
    assert lhs.is_zero()


def test_leibniz_rule_homogeneous():
    rng = random.Random(23)
    n = 6
    for _ in range(60):
        ga = rng.randint(0, n)
        gb = rng.randint(0, n)
        a = random_element(rng, n, grade=ga)
        b = random_element(rng, n, grade=gb)
        i = rng.randrange(n)
        lhs = derive(a * b, i, Side.LEFT)
        sign = -1 if ga & 1 else 1
        rhs = derive(a, i, Side.LEFT) * b + (a * derive(b, i, Side.LEFT)).scale(sign)
        assert lhs == rhs


def test_derivative_index_out_of_range():
    with pytest.raises(IndexError):
        derive(gen(0, 2), 5, Side.LEFT)


# -- Berezin integration -----------------------------------------------------


def test_berezin_defining_convention():
    n = 2
    assert berezin(gen(0, n), [0]) == GE.scalar(1, n)
    assert berezin(GE.scalar(1, n), [0]).is_zero()
    # rightmost listed applied first: dg1 dg0 on (g0 g1) -> -1
    assert berezin(gen(0, n) * gen(1, n), [1, 0]) == GE.scalar(-1, n)


def test_berezin_repeated_index_rejected():
    with pytest.raises(ValueError):
        berezin(gen(0, 2), [0, 0])


def test_double_integral_same_index_is_zero():
    n = 3
    a = (GE.scalar(2, n) + gen(0, n)) * gen(1, n)
    assert berezin(berezin(a, [1]), [1]).is_zero()


# -- Gaussian integrals ------------------------------------------------------


def test_gaussian_identity_matrix():
    # two pairs, A = I, no sources: (-1)^2 det I = 1
    z = gaussian_berezin([[1, 0], [0, 1]], [0, 1], [2, 3], ngen=4)
    assert z == GE.scalar(Fraction(1), 4)


def test_gaussian_diagonal():
    z = gaussian_berezin([[Fraction(2), 0], [0, Fraction(7)]], [0, 1], [2, 3], ngen=4)
    assert z.scalar_part() == 14


def test_gaussian_rejects_odd_entries():
    n = 6
    odd = gen(4, n)
    with pytest.raises(ValueError):
        gaussian_berezin([[odd]], [0], [1], ngen=n)


def test_gaussian_matches_bruteforce_random():
    rng = random.Random(41)
    for npairs in (1, 2, 3, 4):
        ngen = 4 * npairs  # thetas plus one source generator per theta
        tbar = list(range(npairs))
        t = list(range(npairs, 2 * npairs))
        eta = [GE.generator(2 * npairs + i, ngen) for i in range(npairs)]
        etab = [GE.generator(3 * npairs + i, ngen) for i in range(npairs)]
        for _ in range(6):
            a = [
                [Fraction(rng.randint(-3, 3)) for _ in range(npairs)]
                for _ in range(npairs)
            ]
            got = gaussian_berezin(a, tbar, t, eta_bar=etab, eta=eta, ngen=ngen)
            want = brute_gaussian(a, tbar, t, etab, eta, ngen)
            assert got == want


def test_gaussian_matches_bruteforce_composite_sources():
    # sources that are sums of generators, not single ones
    rng = random.Random(8)
    npairs, ngen = 2, 10
    tbar, t = [0, 1], [2, 3]
    eta = [gen(4, ngen) + gen(5, ngen).scale(2), gen(6, ngen)]
    etab = [gen(7, ngen), gen(8, ngen) - gen(9, ngen)]
    a = [[Fraction(rng.randint(-3, 3)) for _ in range(2)] for _ in range(2)]
    assert gaussian_berezin(a, tbar, t, eta_bar=etab, eta=eta, ngen=ngen) == \
        brute_gaussian(a, tbar, t, etab, eta, ngen)


# -- substitution and coefficients -------------------------------------------


def test_substitute_is_homomorphism():
    rng = random.Random(31)
    n = 4
    images = {
        0: gen(2, n) + gen(3, n).scale(2),
        1: gen(2, n) - gen(3, n),
    }
    for _ in range(20):
        a = random_element(rng, 2, max_terms=4)
        a = GE(n, {idx: c for idx, c in a.terms.items()})
        b = random_element(rng, 2, max_terms=4)
        b = GE(n, {idx: c for idx, c in b.terms.items()})
        lhs = (a * b).substitute(images)
        rhs = a.substitute(images) * b.substitute(images)
        assert lhs == rhs


def test_polynomial_coefficients_roundtrip():
    # (x0 + 2) g0 g1, differentiated and evaluated
    p = Polynomial.symbol(0, 2) + Polynomial.const(2, 2)
    e = (gen(0, 3) * gen(1, 3)).scale(p)
    d = derive(e, 0, Side.LEFT)
    assert d == gen(1, 3).scale(p)
    assert p.diff(0) == Polynomial.const(1, 2)
    assert p.subs([3.0, 0.0]) == 5.0


def test_polynomial_arithmetic():
    x = Polynomial.symbol(0, 2)
    y = Polynomial.symbol(1, 2)
    q = (x + y) * (x - y)
    assert q == x * x - y * y
    assert (q - q).is_zero()
    assert q.truncate(1).is_zero()
    assert q.map_symbols([1, 0]) == y * y - x * x
    assert q.map_symbols([0, 1], scale=[1, -1]) == q
