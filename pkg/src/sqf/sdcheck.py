"""Exact micro-lattice checks of the generating-functional structure.

Everything here runs on tiny periodic site graphs (1 to 4 sites), where
the fermionic functional integral is a finite Berezin integral and the
bosonic one is a low-dimensional Gaussian quadrature, so the
Schwinger-Dyson equation of the generating functional, the Hessian
block identity Q^T U_l^T = U_r Q^T and the discrete symmetries of the
action can be checked coefficient by coefficient.

Conventions:
  * sites of an (L1, L2) grid are flattened as s = x1*L2 + x2,
  * the spectral derivative zeroes the multiplier of the unpaired
    (Nyquist) mode on even sides, which keeps it a real antisymmetric,
    reflection-odd matrix (a complex symmetric Nyquist remnant would
    break parity covariance exactly where the symmetry checks live),
  * the Wick counterterm c is the free-field equal-point expectation
    <psibar psi>, written in the manifestly m-odd form
    c = -m tr[(m^2 - K^2)^{-1}] / n_sites with K the massless Dirac
    matrix, so flipping the sign of m flips c bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss

from .gammas import GAMMA1, GAMMA2
from .grassmann import (
    GrassmannElement as GE,
    Polynomial,
    Side,
    derive,
    gaussian_berezin,
)
from .greens import ModelParams

SHAPE_OF = {1: (1, 1), 2: (2, 1), 3: (3, 1), 4: (2, 2)}


# ---------------------------------------------------------------------------
# discrete operators


def _circulant(stencil: np.ndarray) -> np.ndarray:
    L = len(stencil)
    x = np.arange(L)
    return stencil[(x[:, None] - x[None, :]) % L]


def spectral_derivative(L: int) -> np.ndarray:
    """Real antisymmetric circulant d/dx on L periodic sites (spacing 1).

    Built from a single stencil row with the odd symmetry enforced
    entrywise, so antisymmetry and reflection-oddness hold bitwise (the
    symmetry checks downstream demand exact zeros, not 1e-16 ones).
    """
    if L == 1:
        return np.zeros((1, 1))
    n = np.rint(np.fft.fftfreq(L) * L).astype(int)
    mult = 1j * 2.0 * np.pi * n / L
    if L % 2 == 0:
        mult[n == -L // 2] = 0.0  # unpaired mode has no odd partner
    stencil = np.fft.ifft(mult).real
    stencil[0] = 0.0
    for d in range(1, L // 2 + 1):
        v = 0.5 * (stencil[d] - stencil[L - d])
        stencil[d] = v
        stencil[L - d] = -v
    return _circulant(stencil)


def spectral_laplacian(L: int) -> np.ndarray:
    """Real symmetric circulant d^2/dx^2 with the full -p^2 multiplier."""
    if L == 1:
        return np.zeros((1, 1))
    n = np.rint(np.fft.fftfreq(L) * L).astype(int)
    mult = -((2.0 * np.pi * n / L) ** 2)
    stencil = np.fft.ifft(mult).real
    for d in range(1, L // 2 + 1):
        v = 0.5 * (stencil[d] + stencil[L - d])
        stencil[d] = v
        stencil[L - d] = v
    return _circulant(stencil)


# ---------------------------------------------------------------------------
# model on a micro lattice


class FieldLayout:
    """Global generator indices for fields and sources on n sites."""

    def __init__(self, n_sites: int):
        self.n_sites = n_sites
        self.n_f = 2 * n_sites

    def psi(self, site: int, alpha: int) -> int:
        return 2 * site + alpha

    def psibar(self, site: int, alpha: int) -> int:
        return self.n_f + 2 * site + alpha

    def ksrc(self, site: int, alpha: int) -> int:
        return 2 * self.n_f + 2 * site + alpha

    def kbar(self, site: int, alpha: int) -> int:
        return 3 * self.n_f + 2 * site + alpha

    @property
    def ngen_fields(self) -> int:
        return 2 * self.n_f

    @property
    def ngen_full(self) -> int:
        return 4 * self.n_f


class MicroModel:
    """Discretized Yukawa action on an (L1, L2) site grid, 1 <= sites <= 4."""

    def __init__(self, shape: tuple[int, int], params: ModelParams):
        L1, L2 = shape
        n = L1 * L2
        if not 1 <= n <= 4:
            raise ValueError("micro lattices carry 1 to 4 sites")
        self.shape = (L1, L2)
        self.n_sites = n
        self.params = params
        self.layout = FieldLayout(n)

        d1 = spectral_derivative(L1)
        d2 = spectral_derivative(L2)
        big_d1 = np.kron(d1, np.eye(L2))
        big_d2 = np.kron(np.eye(L1), d2)
        self.dirac_massless = (
            np.kron(big_d1, GAMMA1) + np.kron(big_d2, GAMMA2)
        )
        self.dirac = self.dirac_massless + params.m * np.eye(2 * n)
        lap = np.kron(spectral_laplacian(L1), np.eye(L2)) + np.kron(
            np.eye(L1), spectral_laplacian(L2)
        )
        self.boson_form = -lap + params.M**2 * np.eye(n)

        if abs(np.linalg.det(self.dirac)) < 1e-12:
            raise ValueError("fermion quadratic form is singular")
        if np.min(np.linalg.eigvalsh(self.boson_form)) <= 0:
            raise ValueError("boson quadratic form is not positive definite")
        self.counterterm = counterterm_value(
            self.dirac_massless, params.m, n
        )

    def site_of(self, x1: int, x2: int) -> int:
        return (x1 % self.shape[0]) * self.shape[1] + (x2 % self.shape[1])

    def action(self) -> GE:
        """The discretized action as a multivector with polynomial phi
        coefficients: psibar D psi + g (psibar psi - c) phi
        + (1/2) phi B phi."""
        return build_action(self, self.params.m, self.params.g)


def counterterm_value(dirac_massless: np.ndarray, m: float, n_sites: int) -> float:
    """Equal-point <psibar psi> of the free lattice field (odd in m)."""
    k2 = dirac_massless @ dirac_massless
    resolvent = np.linalg.inv(m * m * np.eye(k2.shape[0]) - k2)
    return float(-m * np.real(np.trace(resolvent)) / n_sites)


def build_action(model: MicroModel, m: float, g: float) -> GE:
    lay = model.layout
    n = model.n_sites
    ngen = lay.ngen_fields
    dirac = model.dirac_massless + m * np.eye(2 * n)
    cterm = counterterm_value(model.dirac_massless, m, n)

    def pconst(c):
        return Polynomial.const(c, n)

    acc = GE(ngen)
    for i in range(2 * n):
        for j in range(2 * n):
            cij = dirac[i, j]
            if cij == 0:
                continue
            term = GE.generator(lay.psibar(i // 2, i % 2), ngen) * GE.generator(
                lay.psi(j // 2, j % 2), ngen
            )
            acc = acc + term.scale(pconst(cij))
    if g != 0.0:
        for s in range(n):
            phi_s = Polynomial.symbol(s, n, coeff=g)
            for a in range(2):
                term = GE.generator(lay.psibar(s, a), ngen) * GE.generator(
                    lay.psi(s, a), ngen
                )
                acc = acc + term.scale(phi_s)
            acc = acc + GE.scalar(phi_s * (-cterm), ngen)
    bos = Polynomial(n)
    for x in range(n):
        for y in range(n):
            bxy = model.boson_form[x, y]
            if bxy != 0:
                bos = bos + Polynomial.symbol(x, n) * Polynomial.symbol(y, n) * (
                    0.5 * bxy
                )
    return acc + GE.scalar(bos, ngen)


# ---------------------------------------------------------------------------
# generating functional


def _truncated_exp_poly(values, order: int, n_sites: int) -> Polynomial:
    """prod_x sum_k (j_x phi_x)^k / k!, truncated at total degree `order`."""
    acc = Polynomial.const(1.0, n_sites)
    for x in range(n_sites):
        factor = Polynomial.const(1.0, n_sites)
        coeff = 1.0
        power = Polynomial.const(1.0, n_sites)
        for k in range(1, order + 1):
            coeff /= k
            power = power * Polynomial.symbol(x, n_sites, coeff=values[x])
            factor = factor + power * coeff
        acc = (acc * factor).truncate(order)
    return acc


def generating_functional(model: MicroModel, boson_order: int = 4,
                          nodes_per_site: int | None = None,
                          verify_nodes: bool = True) -> GE:
    """Source-space generating functional, normalized to 1 at zero sources.

    Fermions are integrated exactly per quadrature node through the
    closed-form Gaussian Berezin integral; the boson integral is a
    tensor Gauss-Hermite rule in the eigenbasis of the quadratic form
    after shifting out the counterterm's linear term, which makes the
    remaining integrand polynomial, hence the rule exact.  Fermionic
    sources appear as generators, boson sources as polynomial symbols.
    """
    if boson_order > 8:
        raise ValueError("boson source order capped at 8")
    if nodes_per_site is None:
        nodes_per_site = boson_order + 2 * model.n_sites + 2
    z = _assemble_z(model, boson_order, nodes_per_site)
    if verify_nodes:
        z2 = _assemble_z(model, boson_order, 2 * nodes_per_site)
        disc = (z - z2).max_abs()
        if disc > 1e-10:
            raise RuntimeError(
                f"quadrature order insufficient: node-doubling discrepancy {disc:g}"
            )
    return z


def _assemble_z(model: MicroModel, boson_order: int, nodes: int) -> GE:
    lay = model.layout
    n = model.n_sites
    g = model.params.g
    ngen = lay.ngen_full
    evals, evecs = np.linalg.eigh(model.boson_form)
    mu = np.linalg.solve(model.boson_form, g * model.counterterm * np.ones(n))
    t_nodes, t_weights = hermgauss(nodes)

    theta_bar = [lay.psibar(s, a) for s in range(n) for a in range(2)]
    theta = [lay.psi(s, a) for s in range(n) for a in range(2)]
    eta = [GE.generator(lay.ksrc(s, a), ngen) for s in range(n) for a in range(2)]
    eta_bar = [GE.generator(lay.kbar(s, a), ngen) for s in range(n) for a in range(2)]

    total = GE(ngen)
    for combo in np.ndindex(*([nodes] * n)):
        y = np.array([t_nodes[c] * np.sqrt(2.0 / evals[i])
                      for i, c in enumerate(combo)])
        w = float(np.prod([t_weights[c] for c in combo]))
        phi = mu + evecs @ y
        a = model.dirac + np.kron(np.diag(g * phi), np.eye(2))
        ferm = gaussian_berezin(
            a.tolist(), theta_bar, theta, eta_bar=eta_bar, eta=eta, ngen=ngen
        )
        src_poly = _truncated_exp_poly(phi, boson_order, n) * w
        total = total + ferm.map_coefficients(lambda c: src_poly * c)

    z0 = total.scalar_part()
    norm = z0.terms.get((0,) * n)
    if norm is None or norm == 0:
        raise RuntimeError("vanishing partition function on this micro lattice")
    inv = 1.0 / norm
    return total.map_coefficients(lambda c: c * inv)


def fermion_two_point(z: GE, model: MicroModel) -> np.ndarray:
    """<psi_i psibar_j> extracted from the generating functional."""
    lay = model.layout
    n_f = lay.n_f
    out = np.zeros((n_f, n_f), dtype=complex)
    for i in range(n_f):
        for j in range(n_f):
            e = derive(z, lay.ksrc(j // 2, j % 2), Side.LEFT)
            e = derive(e, lay.kbar(i // 2, i % 2), Side.LEFT)
            coeff = e.scalar_part()
            if isinstance(coeff, Polynomial):
                coeff = coeff.terms.get((0,) * model.n_sites, 0)
            out[i, j] = -coeff
    return out


def boson_two_point(z: GE, model: MicroModel) -> np.ndarray:
    n = model.n_sites
    out = np.zeros((n, n))
    for x in range(n):
        for y in range(n):
            coeff = z.scalar_part()
            if not isinstance(coeff, Polynomial):
                coeff = Polynomial.const(coeff, n)
            val = coeff.diff(x).diff(y).terms.get((0,) * n, 0)
            out[x, y] = np.real(val)
    return out


# ---------------------------------------------------------------------------
# Schwinger-Dyson residual


def sd_equation_residual(model: MicroModel, max_source_order: int = 3,
                         boson_order: int | None = None,
                         mass_shift: float = 0.0,
                         z: GE | None = None) -> float:
    """Max-abs coefficient of (E(Q^T dL/dK) - K) Z up to the given order.

    The derivative-operator substitution follows the written order of
    each field monomial: the leftmost field becomes the outermost
    operator.  `mass_shift` corrupts only the fermion mass inside the
    drift operator (not the functional), for sensitivity tests.
    """
    if max_source_order > 4:
        raise ValueError("source order capped at 4")
    if boson_order is None:
        boson_order = max_source_order + 2
    if z is None:
        z = generating_functional(model, boson_order=boson_order)
    lay = model.layout
    n = model.n_sites
    g = model.params.g
    c = model.counterterm
    dirac = model.dirac + mass_shift * np.eye(lay.n_f)
    ngen = lay.ngen_full

    def o_psi(e: GE, i: int) -> GE:
        return derive(e, lay.kbar(i // 2, i % 2), Side.LEFT)

    def o_psibar(e: GE, i: int) -> GE:
        return -derive(e, lay.ksrc(i // 2, i % 2), Side.LEFT)

    def o_phi(e: GE, x: int) -> GE:
        return e.map_coefficients(
            lambda p: p.diff(x) if isinstance(p, Polynomial)
            else Polynomial(n)
        )

    def jmul(e: GE, x: int) -> GE:
        sym = Polynomial.symbol(x, n)
        return e.map_coefficients(lambda p: sym * p)

    worst = 0.0
    rows: list[GE] = []
    for i in range(lay.n_f):
        row = GE(ngen)
        for j in range(lay.n_f):
            if dirac[i, j] != 0:
                row = row + o_psi(z, j).scale(dirac[i, j])
        if g != 0.0:
            row = row + o_psi(o_phi(z, i // 2), i).scale(g)
        row = row - GE.generator(lay.ksrc(i // 2, i % 2), ngen) * z
        rows.append(row)
    for i in range(lay.n_f):
        row = GE(ngen)
        for j in range(lay.n_f):
            if dirac[j, i] != 0:
                row = row + o_psibar(z, j).scale(dirac[j, i])
        if g != 0.0:
            row = row + o_psibar(o_phi(z, i // 2), i).scale(g)
        row = row - GE.generator(lay.kbar(i // 2, i % 2), ngen) * z
        rows.append(row)
    for x in range(n):
        row = GE(ngen)
        for y in range(n):
            bxy = model.boson_form[x, y]
            if bxy != 0:
                row = row + o_phi(z, y).scale(bxy)
        if g != 0.0:
            wick = GE(ngen)
            for a in range(2):
                wick = wick + o_psibar(o_psi(z, 2 * x + a), 2 * x + a)
            row = row + (wick - z.scale(c)).scale(g)
        row = row - jmul(z, x)
        rows.append(row)

    for row in rows:
        worst = max(worst, _max_abs_up_to_order(row, max_source_order, n))
    return worst


def _max_abs_up_to_order(e: GE, order: int, n_sites: int) -> float:
    worst = 0.0
    for idx, coeff in e.terms.items():
        base = len(idx)
        if base > order:
            continue
        if isinstance(coeff, Polynomial):
            for expo, v in coeff.terms.items():
                if base + sum(expo) <= order:
                    worst = max(worst, abs(complex(v)))
        else:
            worst = max(worst, abs(complex(coeff)))
    return worst


# ---------------------------------------------------------------------------
# mixed operator matrices and the Hessian identity


class MixedOperatorMatrix:
    """3x3 block matrix over (fermion, conjugate fermion, boson) slots.

    Entries are Grassmann elements; block (I, J) must be homogeneous of
    parity (s_I + s_J) mod 2 with species parities (1, 1, 0).
    """

    SPECIES_PARITY = (1, 1, 0)

    def __init__(self, dims: tuple[int, int, int], ngen: int, entries=None):
        self.dims = dims
        self.ngen = ngen
        self.total = sum(dims)
        if entries is None:
            zero = GE(ngen)
            self.entries = [[zero for _ in range(self.total)]
                            for _ in range(self.total)]
        else:
            self.entries = entries

    def species_of(self, flat: int) -> int:
        acc = 0
        for k, d in enumerate(self.dims):
            acc += d
            if flat < acc:
                return k
        raise IndexError(flat)

    def block_offsets(self):
        offs = [0]
        for d in self.dims:
            offs.append(offs[-1] + d)
        return offs

    def matmul(self, other: "MixedOperatorMatrix") -> "MixedOperatorMatrix":
        if other.dims != self.dims:
            raise ValueError("block dimensions differ")
        n = self.total
        out = [[GE(self.ngen) for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for k in range(n):
                a = self.entries[i][k]
                if a.is_zero():
                    continue
                for j in range(n):
                    b = other.entries[k][j]
                    if b.is_zero():
                        continue
                    out[i][j] = out[i][j] + a * b
        return MixedOperatorMatrix(self.dims, self.ngen, out)

    def sub(self, other: "MixedOperatorMatrix") -> "MixedOperatorMatrix":
        n = self.total
        out = [
            [self.entries[i][j] - other.entries[i][j] for j in range(n)]
            for i in range(n)
        ]
        return MixedOperatorMatrix(self.dims, self.ngen, out)

    def max_abs(self) -> float:
        return max(
            (e.max_abs() for row in self.entries for e in row), default=0.0
        )

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def validate_parities(self) -> None:
        for i in range(self.total):
            si = self.SPECIES_PARITY[self.species_of(i)]
            for j in range(self.total):
                sj = self.SPECIES_PARITY[self.species_of(j)]
                e = self.entries[i][j]
                if e.is_zero():
                    continue
                if not e.is_homogeneous_parity() or e.parity() != (si + sj) % 2:
                    raise ValueError(
                        f"entry ({i},{j}) violates parity bookkeeping"
                    )


def source_pairing(dims: tuple[int, int, int], ngen: int) -> MixedOperatorMatrix:
    """The signed species pairing [[0,-1,0],[1,0,0],[0,0,1]] as blocks."""
    q = MixedOperatorMatrix(dims, ngen)
    offs = q.block_offsets()
    nf = dims[0]
    for i in range(nf):
        q.entries[offs[0] + i][offs[1] + i] = GE.scalar(-1, ngen)
        q.entries[offs[1] + i][offs[0] + i] = GE.scalar(1, ngen)
    for x in range(dims[2]):
        q.entries[offs[2] + x][offs[2] + x] = GE.scalar(1, ngen)
    return q


def _transpose_block(q: MixedOperatorMatrix) -> MixedOperatorMatrix:
    n = q.total
    out = [[q.entries[j][i] for j in range(n)] for i in range(n)]
    return MixedOperatorMatrix(q.dims, q.ngen, out)


def hessian_pair(model: MicroModel, action: GE | None = None):
    """Second functional derivatives assembled with the two sign tables.

    Returns (u_right, u_left_t); both are built independently from their
    own derivative tables, so the block identity Q^T U_l^T = U_r Q^T is
    a genuine consistency check between them.
    """
    lay = model.layout
    n = model.n_sites
    nf = lay.n_f
    act = model.action() if action is None else action
    ngen = lay.ngen_fields
    dims = (nf, nf, n)

    psi_idx = [lay.psi(i // 2, i % 2) for i in range(nf)]
    psb_idx = [lay.psibar(i // 2, i % 2) for i in range(nf)]

    def dl(e: GE, gen: int) -> GE:
        return derive(e, gen, Side.LEFT)

    def dphi(e: GE, x: int) -> GE:
        return e.map_coefficients(
            lambda p: p.diff(x) if isinstance(p, Polynomial) else Polynomial(n)
        )

    d_psi = [dl(act, g) for g in psi_idx]
    d_psb = [dl(act, g) for g in psb_idx]
    d_phi = [dphi(act, x) for x in range(n)]

    u_r = MixedOperatorMatrix(dims, ngen)
    u_lt = MixedOperatorMatrix(dims, ngen)
    offs = u_r.block_offsets()

    for i in range(nf):
        for j in range(nf):
            u_r.entries[offs[0] + i][offs[0] + j] = -dl(d_psi[j], psb_idx[i])
            u_r.entries[offs[0] + i][offs[1] + j] = -dl(d_psb[j], psb_idx[i])
            u_r.entries[offs[1] + i][offs[0] + j] = dl(d_psi[j], psi_idx[i])
            u_r.entries[offs[1] + i][offs[1] + j] = dl(d_psb[j], psi_idx[i])
        for x in range(n):
            u_r.entries[offs[0] + i][offs[2] + x] = dl(d_phi[x], psb_idx[i])
            u_r.entries[offs[1] + i][offs[2] + x] = -dl(d_phi[x], psi_idx[i])
    for x in range(n):
        for j in range(nf):
            u_r.entries[offs[2] + x][offs[0] + j] = -dphi(d_psi[j], x)
            u_r.entries[offs[2] + x][offs[1] + j] = -dphi(d_psb[j], x)
        for y in range(n):
            u_r.entries[offs[2] + x][offs[2] + y] = dphi(d_phi[y], x)

    for i in range(nf):
        for j in range(nf):
            u_lt.entries[offs[0] + i][offs[0] + j] = dl(d_psb[j], psi_idx[i])
            u_lt.entries[offs[0] + i][offs[1] + j] = -dl(d_psi[j], psi_idx[i])
            u_lt.entries[offs[1] + i][offs[0] + j] = dl(d_psb[j], psb_idx[i])
            u_lt.entries[offs[1] + i][offs[1] + j] = -dl(d_psi[j], psb_idx[i])
        for x in range(n):
            u_lt.entries[offs[0] + i][offs[2] + x] = dphi(d_psi[i], x)
            u_lt.entries[offs[1] + i][offs[2] + x] = dphi(d_psb[i], x)
    for x in range(n):
        for j in range(nf):
            u_lt.entries[offs[2] + x][offs[0] + j] = dl(d_phi[x], psb_idx[j])
            u_lt.entries[offs[2] + x][offs[1] + j] = -dl(d_phi[x], psi_idx[j])
        for y in range(n):
            u_lt.entries[offs[2] + x][offs[2] + y] = dphi(d_phi[y], x)

    return u_r, u_lt


def hessian_identity_residual(model: MicroModel, field_point=None) -> float:
    """Max-abs coefficient of Q^T U_l^T - U_r Q^T, optionally at a field point.

    `field_point` = (psi_images, psibar_images, phi_values, n_new_gens)
    substitutes odd elements/integers for the fields before forming the
    block products; None keeps fields symbolic.
    """
    u_r, u_lt = hessian_pair(model)
    if field_point is not None:
        u_r = _evaluate_matrix(u_r, model, field_point)
        u_lt = _evaluate_matrix(u_lt, model, field_point)
    u_r.validate_parities()
    u_lt.validate_parities()
    q = source_pairing(u_r.dims, u_r.ngen)
    diff = _transpose_block(q).matmul(u_lt).sub(u_r.matmul(_transpose_block(q)))
    return diff.max_abs()


def _evaluate_matrix(mat: MixedOperatorMatrix, model: MicroModel, field_point):
    psi_imgs, psb_imgs, phi_vals, n_new = field_point
    lay = model.layout
    images = {}
    for i, img in enumerate(psi_imgs):
        images[lay.psi(i // 2, i % 2)] = img
    for i, img in enumerate(psb_imgs):
        images[lay.psibar(i // 2, i % 2)] = img

    def coeff_fn(c):
        if isinstance(c, Polynomial):
            return c.subs(phi_vals)
        return c

    n = mat.total
    out = [
        [
            mat.entries[i][j].substitute(images, ngen_out=n_new, coeff_fn=coeff_fn)
            for j in range(n)
        ]
        for i in range(n)
    ]
    return MixedOperatorMatrix(mat.dims, n_new, out)


def random_field_point(model: MicroModel, rng, n_new: int = 6):
    """Integer-coefficient odd elements for the fermions, ints for phi."""
    lay = model.layout
    nf = lay.n_f

    def odd():
        terms = {}
        for k in range(n_new):
            v = rng.integers(-3, 4)
            if v:
                terms[(k,)] = int(v)
        if not terms:
            terms[(0,)] = 1
        return GE(n_new, terms)

    psi_imgs = [odd() for _ in range(nf)]
    psb_imgs = [odd() for _ in range(nf)]
    phi_vals = [int(rng.integers(-3, 4)) for _ in range(model.n_sites)]
    return (psi_imgs, psb_imgs, phi_vals, n_new)


# ---------------------------------------------------------------------------
# discrete symmetries


@dataclass(frozen=True)
class SymmetryReport:
    parity_residual: float
    ct_residual: float
    ct_no_massflip_residual: float


def _site_perm(model: MicroModel, reflect_x1: bool, reflect_x2: bool):
    L1, L2 = model.shape
    perm = []
    for x1 in range(L1):
        for x2 in range(L2):
            y1 = (-x1) % L1 if reflect_x1 else x1
            y2 = (-x2) % L2 if reflect_x2 else x2
            perm.append(y1 * L2 + y2)
    return perm


def _spinor_map(model: MicroModel, perm, mat_left: np.ndarray,
                to_psibar: bool, source_is_psi: bool):
    """Images of psi (or psibar) generators under x -> perm(x) with a
    spinor rotation."""
    lay = model.layout
    images = {}
    for s in range(model.n_sites):
        for a in range(2):
            acc = GE(lay.ngen_fields)
            for b in range(2):
                coeff = mat_left[a, b] if source_is_psi else mat_left[b, a]
                if coeff == 0:
                    continue
                target = (
                    lay.psibar(perm[s], b) if to_psibar else lay.psi(perm[s], b)
                )
                acc = acc + GE.generator(target, lay.ngen_fields).scale(
                    Polynomial.const(coeff, model.n_sites)
                )
            src = lay.psi(s, a) if source_is_psi else lay.psibar(s, a)
            images[src] = acc
    return images


def symmetry_check(model: MicroModel) -> SymmetryReport:
    """Parity and (charge x time) covariance of the discretized action.

    P: psi(x) -> gamma1 psi(Px), psibar(x) -> psibar(Px) gamma1,
       phi -> phi o P, with P reflecting the second coordinate; the
       action must be exactly invariant.
    CT: psi(x) -> gamma2 psibar(Tx), psibar(x) -> psi(Tx) gamma2,
       phi(x) -> -phi(Tx) (anti-linear, T reflecting the first
       coordinate); the action must map exactly onto the action with
       m replaced by -m.  Without the mass flip the residual is the
       doubled mass term and counterterm, hence nonzero.
    """
    n = model.n_sites
    m, g = model.params.m, model.params.g
    act = build_action(model, m, g)
    act_flip = build_action(model, -m, g)

    # parity
    perm_p = _site_perm(model, reflect_x1=False, reflect_x2=True)
    images = {}
    images.update(_spinor_map(model, perm_p, GAMMA1, to_psibar=False,
                              source_is_psi=True))
    images.update(_spinor_map(model, perm_p, GAMMA1, to_psibar=True,
                              source_is_psi=False))

    def p_coeff(c):
        poly = c if isinstance(c, Polynomial) else Polynomial.const(c, n)
        return poly.map_symbols(perm_p)

    p_res = (act.substitute(images, coeff_fn=p_coeff) - act).max_abs()

    # charge-time with pseudoscalar boson
    perm_t = _site_perm(model, reflect_x1=True, reflect_x2=False)
    images_ct = {}
    images_ct.update(_spinor_map(model, perm_t, GAMMA2, to_psibar=True,
                                 source_is_psi=True))
    images_ct.update(_spinor_map(model, perm_t, GAMMA2, to_psibar=False,
                                 source_is_psi=False))

    def ct_coeff(c):
        poly = c if isinstance(c, Polynomial) else Polynomial.const(c, n)
        return poly.conj().map_symbols(perm_t, scale=[-1] * n)

    transformed = act.substitute(images_ct, coeff_fn=ct_coeff)
    ct_res = (transformed - act_flip).max_abs()
    ct_noflip = (transformed - act).max_abs()
    return SymmetryReport(
        parity_residual=p_res,
        ct_residual=ct_res,
        ct_no_massflip_residual=ct_noflip,
    )
