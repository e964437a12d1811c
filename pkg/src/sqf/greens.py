"""Euclidean propagator and retarded kernels of the free Langevin flow.

All kernels are evaluated in momentum space as closed-form matrix
exponentials (the residue evaluation of the frequency integrals), so
per-mode values are exact up to rounding:

    G(t, p)    = theta(t) exp(-(m + i pslash) t)
    Gbar(t, p) = theta(t) exp(-(m - i pslash^T) t)
    P(t, p)    = theta(t) exp(-(p^2 + M^2) t)

The noise normalization is fixed once and for all to
<eta etabar> = 2 delta, <xi xi> = 2 delta; it is the unique choice for
which the free stationary correlators reproduce S(p) and 1/(p^2+M^2),
and that reproduction is itself part of the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gammas import GAMMA1, GAMMA2, GAMMA3, ID2, Momentum2, as_momentum, mat_exp, slash
from .quadrature import integrate_refine


@dataclass(frozen=True)
class ModelParams:
    """Fermion mass m > 0, boson mass M > 0, Yukawa coupling g."""

    m: float
    M: float
    g: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("fermion mass must be positive")
        if not self.M > 0:
            raise ValueError("boson mass must be positive")


def euclidean_S(p, m: float):
    """Momentum-space Euclidean propagator (-i pslash + m)/(p^2 + m^2)."""
    p = as_momentum(p)
    denom = p.norm2 + m * m
    if denom == 0.0:
        raise ValueError("propagator pole: p = 0 and m = 0")
    return (-1j * slash(p) + m * ID2) / denom


def retarded_G(t: float, p, m: float):
    """Retarded fermion kernel; identically zero for t < 0, I at t = 0."""
    if t < 0:
        return np.zeros((2, 2), dtype=complex)
    return mat_exp(m * ID2 + 1j * slash(p), t)


def retarded_Gbar(t: float, p, m: float):
    """Retarded conjugate-fermion kernel, theta(t) exp(-(m - i pslash^T) t)."""
    if t < 0:
        return np.zeros((2, 2), dtype=complex)
    return mat_exp(m * ID2 - 1j * slash(p).T, t)


def retarded_P(t: float, p, M: float) -> float:
    """Retarded boson kernel theta(t) exp(-(p^2 + M^2) t)."""
    if t < 0:
        return 0.0
    p = as_momentum(p)
    return float(np.exp(-(p.norm2 + M * M) * t))


# ---------------------------------------------------------------------------
# vectorized kernel evaluation


def _sinhc_arr(z):
    small = np.abs(z) < 1e-4
    safe = np.where(small, 1.0, z)
    out = np.sinh(safe) / safe
    series = 1.0 + z * z / 6.0
    return np.where(small, series, out)


def exp_batch(a, taus):
    """exp(-a*tau) for one 2x2 matrix over an array of times: (2,2,n)."""
    a = np.asarray(a, dtype=complex)
    taus = np.asarray(taus, dtype=float)
    alpha = 0.5 * np.trace(a)
    v1 = 0.5 * np.trace(GAMMA1 @ a)
    v2 = 0.5 * np.trace(GAMMA2 @ a)
    v3 = 0.5 * np.trace(GAMMA3 @ a)
    bmat = v1 * GAMMA1 + v2 * GAMMA2 + v3 * GAMMA3
    beta = np.sqrt(complex(v1 * v1 + v2 * v2 + v3 * v3))
    bt = beta * taus
    pref = np.exp(-alpha * taus)
    ch = np.cosh(bt)
    sc = taus * _sinhc_arr(bt)
    return pref * (ch * ID2[:, :, None] - sc * bmat[:, :, None])


# ---------------------------------------------------------------------------
# equal-time identity for the block kernel


@dataclass(frozen=True)
class GreenIdentityResult:
    """LHS/RHS of the equal-time kernel identity, embedded as 5x5 blocks.

    Block layout: rows/cols = (fermion 2, conjugate fermion 2, boson 1).
    """

    lhs: np.ndarray
    rhs: np.ndarray
    quad_error: float

    @property
    def lhs_norm(self) -> float:
        return float(np.max(np.abs(self.lhs)))

    @property
    def diff_norm(self) -> float:
        return float(np.max(np.abs(self.lhs - self.rhs)))


def green_equal_time_identity(t1: float, t2: float, p, params: ModelParams,
                              tol: float = 1e-10) -> GreenIdentityResult:
    """Convolution of d/dt G with the transposed retarded kernel.

    LHS(t1, t2) = int dtau  d_t G(t1 - tau) Q^T G^T(tau - t2), where the
    transposed operator has the advanced kernel G^T(u) = G(-u)^T, and
    the delta from d_t theta(t) exp(...) is added in closed form with
    the symmetric Heaviside value theta(0) = 1/2 (the convention under
    which the identity holds pointwise at t1 = t2).  RHS is the closed
    form (Q^T G^T - G Q^T)(t1 - t2) / 2.  Both sides vanish at t1 = t2.
    """
    p = as_momentum(p)
    m, bigm = params.m, params.M
    a_f = m * ID2 + 1j * slash(p)            # fermion generator at +p
    b_f = m * ID2 - 1j * slash(p).T          # conjugate-fermion generator
    lam = p.norm2 + bigm * bigm
    w = min(t1, t2)
    delta = t1 - t2

    def heav(x: float) -> float:
        if x > 0:
            return 1.0
        return 0.5 if x == 0 else 0.0

    # windows long enough that the dropped tail is ~ exp(-40)
    win_f = 40.0 / (2.0 * m)
    win_b = 40.0 / (2.0 * lam)

    def f12(taus):
        left = exp_batch(a_f, t1 - taus)          # G(t1 - tau, p)
        right = np.transpose(
            exp_batch(m * ID2 - 1j * slash((-p.p1, -p.p2)).T, t2 - taus),
            (1, 0, 2),
        )                                          # [Gbar(t2 - tau, -p)]^T
        return -np.einsum("ij,jkn,kln->iln", a_f, left, right)

    def f21(taus):
        left = exp_batch(b_f, t1 - taus)          # Gbar(t1 - tau, p)
        right = np.transpose(
            exp_batch(m * ID2 + 1j * slash((-p.p1, -p.p2)), t2 - taus),
            (1, 0, 2),
        )                                          # [G(t2 - tau, -p)]^T
        return np.einsum("ij,jkn,kln->iln", b_f, left, right)

    def f33(taus):
        return -lam * np.exp(-lam * (t1 - taus)) * np.exp(-lam * (t2 - taus))

    q12, e12 = integrate_refine(f12, w - win_f, w, tol=tol)
    q21, e21 = integrate_refine(f21, w - win_f, w, tol=tol)
    q33, e33 = integrate_refine(f33, w - win_b, w, tol=tol)

    lhs = np.zeros((5, 5), dtype=complex)
    rhs = np.zeros((5, 5), dtype=complex)

    bnd12 = heav(t2 - t1) * (mat_exp(a_f, t2 - t1) if t2 >= t1 else np.zeros((2, 2)))
    bnd21 = heav(t2 - t1) * (mat_exp(b_f, t2 - t1) if t2 >= t1 else np.zeros((2, 2)))
    lhs[0:2, 2:4] = bnd12 + q12
    lhs[2:4, 0:2] = -bnd21 + q21
    lhs[4, 4] = heav(t2 - t1) * np.exp(-lam * max(t2 - t1, 0.0)) + q33

    gbar_t = retarded_Gbar(-delta, (-p.p1, -p.p2), m).T
    g_t = retarded_G(-delta, (-p.p1, -p.p2), m).T
    rhs[0:2, 2:4] = (gbar_t - retarded_G(delta, p, m)) / 2.0
    rhs[2:4, 0:2] = (-g_t + retarded_Gbar(delta, p, m)) / 2.0
    rhs[4, 4] = (retarded_P(-delta, p, bigm) - retarded_P(delta, p, bigm)) / 2.0

    return GreenIdentityResult(lhs, rhs, max(e12, e21, e33))


# ---------------------------------------------------------------------------
# free stationary correlators


def stationary_fermion_correlator(T_cut: float, p, m: float,
                                  tol: float = 1e-11):
    """2 * int_0^T G(tau, p) Gbar^T(tau, -p) dtau, by panel quadrature.

    Converges to euclidean_S(p, m) with error O(exp(-2 m T_cut)).
    """
    if T_cut <= 0:
        return np.zeros((2, 2), dtype=complex)
    p = as_momentum(p)
    a_f = m * ID2 + 1j * slash(p)

    def f(taus):
        g = exp_batch(a_f, taus)
        gbar_t = np.transpose(
            exp_batch(m * ID2 - 1j * slash((-p.p1, -p.p2)).T, taus), (1, 0, 2)
        )
        return 2.0 * np.einsum("ijn,jkn->ikn", g, gbar_t)

    # enough initial panels to resolve the oscillation at rate 2|p|
    n0 = max(8, int(np.ceil(T_cut * (2 * m + 2 * p.norm) / 4.0)))
    val, _ = integrate_refine(f, 0.0, T_cut, tol=tol, initial_panels=n0)
    return val


def stationary_boson_variance(T_cut: float, p, M: float,
                              tol: float = 1e-11) -> float:
    """2 * int_0^T P(tau, p)^2 dtau -> 1/(p^2 + M^2) as T_cut grows."""
    if T_cut <= 0:
        return 0.0
    p = as_momentum(p)
    lam = p.norm2 + M * M

    def f(taus):
        return 2.0 * np.exp(-2.0 * lam * taus)

    val, _ = integrate_refine(f, 0.0, T_cut, tol=tol)
    return float(val)


def dirac_identity_max_residual(m: float, p1_grid, p2_grid) -> float:
    """max over the grid of || (i pslash + m) S(p) - I ||_maxabs."""
    p1 = np.asarray(p1_grid, dtype=float).ravel()
    p2 = np.asarray(p2_grid, dtype=float).ravel()
    denom = p1 * p1 + p2 * p2 + m * m
    # S entries
    s11 = m / denom
    s22 = s11
    s12 = -1j * (p1 - 1j * p2) / denom
    s21 = -1j * (p1 + 1j * p2) / denom
    # d = i pslash + m
    d11 = np.full_like(s11, m, dtype=complex)
    d22 = d11
    d12 = 1j * (p1 - 1j * p2)
    d21 = 1j * (p1 + 1j * p2)
    r11 = d11 * s11 + d12 * s21 - 1.0
    r12 = d11 * s12 + d12 * s22
    r21 = d21 * s11 + d22 * s21
    r22 = d21 * s12 + d22 * s22 - 1.0
    return float(
        max(np.max(np.abs(r)) for r in (r11, r12, r21, r22))
    )
