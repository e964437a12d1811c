"""Euclidean gamma matrices in two dimensions and 2x2 matrix calculus.

The Clifford generators are the Pauli matrices.  Every kernel in this
package is a linear combination of {I, gamma1, gamma2, gamma3}, which
spans all complex 2x2 matrices, so the closed-form exponential below
covers the general case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ID2 = np.eye(2, dtype=complex)
GAMMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
GAMMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
GAMMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# SpinMatrix values are plain (2, 2) complex ndarrays throughout.
SpinMatrix = np.ndarray


@dataclass(frozen=True)
class Momentum2:
    """Spatial momentum with two real components (units 1/length)."""

    p1: float
    p2: float

    def __post_init__(self):
        if not (np.isfinite(self.p1) and np.isfinite(self.p2)):
            raise ValueError("momentum components must be finite")

    @property
    def norm(self) -> float:
        return float(np.hypot(self.p1, self.p2))

    @property
    def norm2(self) -> float:
        return float(self.p1 * self.p1 + self.p2 * self.p2)


def as_momentum(p) -> Momentum2:
    if isinstance(p, Momentum2):
        return p
    p1, p2 = p
    return Momentum2(float(p1), float(p2))


@dataclass(frozen=True)
class GammaRep:
    """A concrete representation of the Euclidean Clifford generators."""

    gamma1: SpinMatrix
    gamma2: SpinMatrix
    gamma3: SpinMatrix


def build_gamma() -> GammaRep:
    """Return the Pauli representation of the 2D Euclidean gamma matrices."""
    return GammaRep(GAMMA1.copy(), GAMMA2.copy(), GAMMA3.copy())


def slash(p, rep: GammaRep | None = None) -> SpinMatrix:
    """Contraction p1*gamma1 + p2*gamma2; hermitian, squares to |p|^2."""
    p = as_momentum(p)
    g1 = rep.gamma1 if rep is not None else GAMMA1
    g2 = rep.gamma2 if rep is not None else GAMMA2
    return p.p1 * g1 + p.p2 * g2


def _sinhc(z: complex) -> complex:
    # sinh(z)/z, stable near 0
    if abs(z) < 1e-4:
        z2 = z * z
        return 1.0 + z2 / 6.0 + z2 * z2 / 120.0
    return np.sinh(z) / z


def mat_exp(a: SpinMatrix, t: float) -> SpinMatrix:
    """exp(-a*t) for a 2x2 complex matrix, via the Clifford decomposition.

    Writes a = alpha*I + sum_k v_k gamma_k (the Pauli basis spans all of
    M2(C)), so exp(-a t) = exp(-alpha t) [cosh(beta t) I - t sinhc(beta t) B]
    with B = sum v_k gamma_k and beta^2 = v.v.  Complex beta covers the
    oscillatory case; the beta -> 0 limit is taken by series.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix entries must be finite")
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    alpha = 0.5 * np.trace(a)
    v1 = 0.5 * np.trace(GAMMA1 @ a)
    v2 = 0.5 * np.trace(GAMMA2 @ a)
    v3 = 0.5 * np.trace(GAMMA3 @ a)
    bmat = v1 * GAMMA1 + v2 * GAMMA2 + v3 * GAMMA3
    beta = np.sqrt(complex(v1 * v1 + v2 * v2 + v3 * v3))
    bt = beta * t
    return np.exp(-alpha * t) * (np.cosh(bt) * ID2 - t * _sinhc(bt) * bmat)


def gamma_invariant_residuals(rep: GammaRep | None = None) -> dict[str, float]:
    """Max-abs residuals of the defining gamma-algebra identities.

    All residuals are exactly zero for the Pauli representation: the
    entries are exact integers/half-integers and the checks involve no
    rounding.
    """
    rep = rep or build_gamma()
    gs = [rep.gamma1, rep.gamma2, rep.gamma3]
    out: dict[str, float] = {}
    for i in range(3):
        for j in range(3):
            acomm = gs[i] @ gs[j] + gs[j] @ gs[i]
            target = 2.0 * ID2 if i == j else np.zeros((2, 2))
            out[f"anticommutator_{i + 1}{j + 1}"] = float(
                np.max(np.abs(acomm - target))
            )
    for i, g in enumerate(gs, start=1):
        out[f"hermiticity_{i}"] = float(np.max(np.abs(g - g.conj().T)))
    out["gamma3_product"] = float(
        np.max(np.abs(rep.gamma3 - (-1j) * rep.gamma1 @ rep.gamma2))
    )
    out["gamma1_symmetric"] = float(np.max(np.abs(rep.gamma1 - rep.gamma1.T)))
    return out
