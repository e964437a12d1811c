"""Periodic 2D lattice, its dual momentum grid and field representations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LatticeSpec:
    """L1 x L2 periodic lattice with spacing a.

    Dual momenta are p_k = 2 pi n_k / (L_k a) with n_k in [-L_k/2, L_k/2).
    """

    L1: int
    L2: int
    a: float = 1.0

    def __post_init__(self):
        for L in (self.L1, self.L2):
            if L < 2 or L % 2:
                raise ValueError("lattice sides must be even and >= 2")
        if not self.a > 0:
            raise ValueError("lattice spacing must be positive")

    @property
    def volume(self) -> int:
        return self.L1 * self.L2

    def mode_numbers(self):
        n1 = np.rint(np.fft.fftfreq(self.L1) * self.L1).astype(int)
        n2 = np.rint(np.fft.fftfreq(self.L2) * self.L2).astype(int)
        return n1, n2

    def momentum_grids(self):
        """P1, P2 arrays of shape (L1, L2) in FFT ordering."""
        p1 = 2.0 * np.pi * np.fft.fftfreq(self.L1) / self.a
        p2 = 2.0 * np.pi * np.fft.fftfreq(self.L2) / self.a
        return np.meshgrid(p1, p2, indexing="ij")

    def psq_grid(self):
        P1, P2 = self.momentum_grids()
        return P1 * P1 + P2 * P2

    @property
    def psq_max(self) -> float:
        return float(np.max(self.psq_grid()))


class BosonField:
    """Real scalar field on a lattice, with a mode representation.

    Mode amplitudes use the unitary-style normalization
    phihat(p) = V^{-1/2} sum_x phi(x) exp(-i p.x), under which a real
    field satisfies phihat(-p) = conj(phihat(p)).
    """

    def __init__(self, spec: LatticeSpec, values: np.ndarray):
        values = np.asarray(values)
        if values.shape != (spec.L1, spec.L2):
            raise ValueError("field shape does not match lattice")
        self.spec = spec
        self.values = values.astype(float)

    @classmethod
    def zeros(cls, spec: LatticeSpec) -> "BosonField":
        return cls(spec, np.zeros((spec.L1, spec.L2)))

    @classmethod
    def from_modes(cls, spec: LatticeSpec, modes: np.ndarray) -> "BosonField":
        values = np.fft.ifft2(modes) * np.sqrt(spec.volume)
        if np.max(np.abs(values.imag)) > 1e-10 * max(1.0, np.max(np.abs(values.real))):
            raise ValueError("mode amplitudes violate conjugation symmetry")
        return cls(spec, values.real)

    def modes(self) -> np.ndarray:
        return np.fft.fft2(self.values) / np.sqrt(self.spec.volume)

    def conjugation_residual(self) -> float:
        m = self.modes()
        flipped = np.conj(np.roll(np.flip(m, axis=(0, 1)), 1, axis=(0, 1)))
        return float(np.max(np.abs(m - flipped)))

    def parseval_residual(self) -> float:
        m = self.modes()
        return float(abs(np.sum(self.values**2) - np.sum(np.abs(m) ** 2)))
