"""Langevin Monte Carlo for the free boson sector, plus exact fermion tables.

The boson field is the only field with a pointwise numerical sample
representation; fermions are Grassmann-valued and are never sampled
stochastically here.  Free-fermion observables are evaluated exactly
through the noise-covariance convolutions of the greens module, and
this module only tabulates them.

Site noise is normalized as <xi(t,x) xi(s,y)> = 2 delta(t-s) delta_xy / a^2,
matching the kernel-side convention; mode estimates are reported as
a^2 <|phihat(p)|^2| with phihat = V^{-1/2} sum_x phi(x) exp(-i p.x),
whose stationary value is 1/(p^2 + M^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .greens import ModelParams
from .lattice import BosonField, LatticeSpec
from .quadrature import panel_nodes


class Integrator(Enum):
    EULER_MARUYAMA = "euler"
    EXPONENTIAL_MODE = "exp"


@dataclass(frozen=True)
class ChainConfig:
    dt: float
    n_steps: int
    n_burn_in: int
    n_chains: int = 1
    seed: int = 0
    integrator: Integrator = Integrator.EXPONENTIAL_MODE

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.n_burn_in >= self.n_steps:
            raise ValueError("burn-in must be shorter than the run")
        if self.n_chains < 1:
            raise ValueError("need at least one chain")


@dataclass
class CorrelatorTable:
    """Per-mode estimates with error bars, on the dual grid (FFT order)."""

    spec: LatticeSpec
    kind: str                      # "boson" or "fermion"
    estimates: np.ndarray          # (L1,L2) real or (L1,L2,2,2) complex
    stderr: np.ndarray             # (L1,L2)
    n_samples: int
    normalization: str = ""

    def __eq__(self, other):
        return (
            isinstance(other, CorrelatorTable)
            and self.spec == other.spec
            and self.kind == other.kind
            and np.array_equal(self.estimates, other.estimates)
            and np.array_equal(self.stderr, other.stderr)
            and self.n_samples == other.n_samples
        )


def chain_rng(seed: int, chain_id: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, chain); the Philox counter
    advances deterministically with the draws, so (seed, chainId, step)
    fixes every variate independent of platform."""
    key = np.array([np.uint64(seed), np.uint64(chain_id)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _ou_factors(spec: LatticeSpec, params: ModelParams, dt: float):
    lam = spec.psq_grid() + params.M**2
    decay = np.exp(-lam * dt)
    kick = np.sqrt((1.0 - decay**2) / (spec.a**2 * lam))
    return decay, kick


def step_boson(state: BosonField, noise: np.ndarray, params: ModelParams,
               spec: LatticeSpec, config: ChainConfig) -> BosonField:
    """One update of the free (g = 0) boson Langevin flow.

    `noise` is a (L1, L2) array of standard normals supplied by the
    caller (which owns the RNG stream).
    """
    noise = np.asarray(noise, dtype=float)
    if config.integrator is Integrator.EULER_MARUYAMA:
        lam_max = spec.psq_max + params.M**2
        if config.dt >= 2.0 / lam_max:
            raise ValueError(
                f"Euler-Maruyama unstable: dt >= 2/(p^2_max + M^2) = {2.0 / lam_max:g}"
            )
        psq = spec.psq_grid()
        lap = np.fft.ifft2(-psq * np.fft.fft2(state.values)).real
        drift = lap - params.M**2 * state.values
        new = state.values + config.dt * drift + np.sqrt(
            2.0 * config.dt / spec.a**2
        ) * noise
        return BosonField(spec, new)
    decay, kick = _ou_factors(spec, params, config.dt)
    modes = state.modes()
    noise_modes = np.fft.fft2(noise) / np.sqrt(spec.volume)
    return BosonField.from_modes(spec, decay * modes + kick * noise_modes)


def run_boson_chain(config: ChainConfig, params: ModelParams,
                    spec: LatticeSpec, n_batches: int = 32) -> CorrelatorTable:
    """Estimate a^2 <|phihat(p)|^2> for every mode, with batch-means errors.

    Chains are independent (one Philox stream each) and the per-chain
    measurement sums are merged at the end, so the result does not
    depend on scheduling.
    """
    measured = config.n_steps - config.n_burn_in
    if measured < n_batches:
        raise ValueError("too few measured steps for batch means")
    shape = (config.n_chains, spec.L1, spec.L2)
    sqrt_v = np.sqrt(spec.volume)

    if config.integrator is Integrator.EULER_MARUYAMA:
        lam_max = spec.psq_max + params.M**2
        if config.dt >= 2.0 / lam_max:
            raise ValueError(
                f"Euler-Maruyama unstable: dt >= 2/(p^2_max + M^2) = {2.0 / lam_max:g}"
            )
        psq = spec.psq_grid()
    decay, kick = _ou_factors(spec, params, config.dt)

    rngs = [chain_rng(config.seed, c) for c in range(config.n_chains)]
    # boundaries of the measurement batches (per chain)
    edges = np.linspace(0, measured, n_batches + 1).astype(int)
    batch_of = np.zeros(measured, dtype=int)
    for b in range(n_batches):
        batch_of[edges[b]:edges[b + 1]] = b

    modes = np.zeros(shape, dtype=complex)      # start from phi = 0
    batch_sums = np.zeros((config.n_chains, n_batches, spec.L1, spec.L2))
    chunk = 512
    step = 0
    while step < config.n_steps:
        n_now = min(chunk, config.n_steps - step)
        noises = np.stack(
            [rng.standard_normal((n_now, spec.L1, spec.L2)) for rng in rngs]
        )  # (C, n_now, L1, L2)
        for k in range(n_now):
            zhat = np.fft.fft2(noises[:, k], axes=(1, 2)) / sqrt_v
            if config.integrator is Integrator.EULER_MARUYAMA:
                drift = -(psq + params.M**2) * modes
                modes = modes + config.dt * drift + np.sqrt(
                    2.0 * config.dt / spec.a**2
                ) * zhat
            else:
                modes = decay * modes + kick * zhat
            t = step + k
            if t >= config.n_burn_in:
                b = batch_of[t - config.n_burn_in]
                batch_sums[:, b] += np.abs(modes) ** 2
        step += n_now
        finite = np.isfinite(modes.view(float)).reshape(modes.shape + (2,))
        if not finite.all():
            chain, i, j = np.argwhere(~finite.all(axis=-1))[0]
            raise RuntimeError(
                f"chain {chain} diverged by step {step} at mode ({i}, {j})"
            )

    lens = np.diff(edges)
    batch_means = batch_sums / lens[None, :, None, None]
    batch_means = batch_means.reshape(config.n_chains * n_batches,
                                      spec.L1, spec.L2)
    nb = batch_means.shape[0]
    est = spec.a**2 * batch_means.mean(axis=0)
    stderr = spec.a**2 * batch_means.std(axis=0, ddof=1) / np.sqrt(nb)
    return CorrelatorTable(
        spec=spec,
        kind="boson",
        estimates=est,
        stderr=stderr,
        n_samples=measured * config.n_chains,
        normalization="a^2 <|phihat(p)|^2>, phihat = V^{-1/2} sum_x phi e^{-ipx}",
    )


def boson_exact_variance(spec: LatticeSpec, params: ModelParams) -> np.ndarray:
    return 1.0 / (spec.psq_grid() + params.M**2)


def free_fermion_table(spec: LatticeSpec, m: float, T_cut: float,
                       npanels: int | None = None) -> CorrelatorTable:
    """Exact per-mode equal-time fermion correlator C(T_cut, p).

    C(T_cut, p) = 2 int_0^{T_cut} G(tau, p) Gbar^T(tau, -p) dtau reduces
    per mode to two scalar quadratures through the spin decomposition
    exp(-2(m + i pslash) tau); the stderr field carries the
    deterministic panel-doubling error bound.
    """
    P1, P2 = spec.momentum_grids()
    p1 = P1.ravel()
    p2 = P2.ravel()
    pn = np.hypot(p1, p2)
    est = np.zeros((spec.volume, 2, 2), dtype=complex)
    err = np.zeros(spec.volume)
    if T_cut > 0:
        if npanels is None:
            npanels = max(16, int(np.ceil(T_cut * (2 * m + 2 * np.max(pn)) / 4.0)))

        def assemble(n):
            nodes, weights = panel_nodes(0.0, T_cut, n)
            env = np.exp(-2.0 * m * nodes)[None, :]
            phase = 2.0 * pn[:, None] * nodes[None, :]
            i_c = (env * np.cos(phase)) @ weights
            i_s = (env * np.sin(phase)) @ weights
            out = np.zeros((spec.volume, 2, 2), dtype=complex)
            out[:, 0, 0] = 2.0 * i_c
            out[:, 1, 1] = 2.0 * i_c
            unit = np.where(pn > 0, pn, 1.0)
            out[:, 0, 1] = -2j * i_s * (p1 - 1j * p2) / unit
            out[:, 1, 0] = -2j * i_s * (p1 + 1j * p2) / unit
            return out

        coarse = assemble(npanels)
        est = assemble(2 * npanels)
        err = np.max(np.abs(est - coarse), axis=(1, 2))
    return CorrelatorTable(
        spec=spec,
        kind="fermion",
        estimates=est.reshape(spec.L1, spec.L2, 2, 2),
        stderr=err.reshape(spec.L1, spec.L2),
        n_samples=0,
        normalization="C(T_cut, p) = 2 int_0^T G(tau,p) Gbar^T(tau,-p) dtau",
    )


def euclidean_S_grid(spec: LatticeSpec, m: float) -> np.ndarray:
    """S(p) on the dual grid, shape (L1, L2, 2, 2)."""
    P1, P2 = spec.momentum_grids()
    denom = P1**2 + P2**2 + m * m
    out = np.zeros((spec.L1, spec.L2, 2, 2), dtype=complex)
    out[..., 0, 0] = m / denom
    out[..., 1, 1] = m / denom
    out[..., 0, 1] = -1j * (P1 - 1j * P2) / denom
    out[..., 1, 0] = -1j * (P1 + 1j * P2) / denom
    return out
