"""Perturbative cross-check: fixed-point trees versus equilibrium moments.

The fixed-point map psi = G(-V + noise) is iterated symbolically into
rooted trees (vertices = interaction insertions, leaves = noise), the
noise average is taken by enumerating Wick pairings with Koszul signs,
and the remaining vertex-time integrals are done by adaptive panel
quadrature with a decay cutoff T_cut.  The same equal-time correlators
are computed independently from the equilibrium Gaussian-moment
expansion of the action (no stochastic time anywhere); order by order
in the coupling the two must agree, which is the module's central test.

Both sides live on a toy mode set: a self-conjugate subgroup of the
dual lattice (the zero mode and Nyquist modes), so boson modes stay
real, momentum bookkeeping is exact group addition, and every kernel,
sign and time-ordering rule is exercised at negligible cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from .gammas import ID2, slash
from .greens import ModelParams, euclidean_S, exp_batch
from .quadrature import integrate_box_refine, integrate_refine

PSI, PSIBAR, PHI = "psi", "psibar", "phi"


# ---------------------------------------------------------------------------
# toy mode sets


@dataclass(frozen=True)
class ToyModeSet:
    """Self-conjugate dual modes closed under addition (2-torsion group)."""

    modes: tuple[tuple[float, float], ...]

    @classmethod
    def subgroup(cls, n_modes: int, pmax: float = np.pi) -> "ToyModeSet":
        if n_modes == 1:
            return cls(((0.0, 0.0),))
        if n_modes == 2:
            return cls(((0.0, 0.0), (pmax, 0.0)))
        if n_modes == 4:
            return cls(((0.0, 0.0), (pmax, 0.0), (0.0, pmax), (pmax, pmax)))
        raise ValueError("supported toy sets have 1, 2 or 4 modes")

    def __len__(self) -> int:
        return len(self.modes)

    def add(self, i: int, j: int) -> int:
        # every element is its own inverse; componentwise xor of Nyquist bits
        a, b = self.modes[i], self.modes[j]
        target = (abs(a[0] - b[0]), abs(a[1] - b[1]))
        for k, mode in enumerate(self.modes):
            if mode == target:
                return k
        raise ValueError("mode set is not closed under addition")

    def psq(self, i: int) -> float:
        p1, p2 = self.modes[i]
        return p1 * p1 + p2 * p2


def toy_counterterm(modeset: ToyModeSet, m: float) -> float:
    """Equal-point <psibar psi> on the toy set: -sum_q tr S(q)."""
    return float(
        -sum(np.real(np.trace(euclidean_S(q, m))) for q in modeset.modes)
    )


# ---------------------------------------------------------------------------
# fixed-point trees


@dataclass(frozen=True)
class Leaf:
    species: str


@dataclass(frozen=True)
class CVertex:
    """Counterterm insertion on a boson line (one coupling order, no leaves)."""


@dataclass(frozen=True)
class Vertex:
    species: str
    children: tuple


@lru_cache(maxsize=None)
def expand_fixpoint(species: str, order: int) -> tuple:
    """All trees contributing to one field component at a coupling order."""
    if order < 0:
        return ()
    if order > 3:
        raise ValueError("tree expansion capped at order 3")
    if order == 0:
        return (Leaf(species),)
    out = []
    if species in (PSI, PSIBAR):
        for i in range(order):
            j = order - 1 - i
            for line in expand_fixpoint(species, i):
                for bos in expand_fixpoint(PHI, j):
                    out.append(Vertex(species, (line, bos)))
    else:
        for i in range(order):
            j = order - 1 - i
            for bar in expand_fixpoint(PSIBAR, i):
                for line in expand_fixpoint(PSI, j):
                    out.append(Vertex(PHI, (bar, line)))
        if order == 1:
            out.append(CVertex())
    return tuple(out)


@lru_cache(maxsize=None)
def tree_count(species: str, order: int) -> int:
    """Counting recursion kept independent of the enumeration."""
    if order == 0:
        return 1
    if species in (PSI, PSIBAR):
        return sum(
            tree_count(species, i) * tree_count(PHI, order - 1 - i)
            for i in range(order)
        )
    total = sum(
        tree_count(PSIBAR, i) * tree_count(PSI, order - 1 - i)
        for i in range(order)
    )
    return total + (1 if order == 1 else 0)


def tree_stats(tree) -> tuple[int, int, bool]:
    """(vertices, noise leaves, has_counterterm)."""
    if isinstance(tree, Leaf):
        return 0, 1, False
    if isinstance(tree, CVertex):
        return 1, 0, True
    v, l, c = 1, 0, False
    for ch in tree.children:
        cv, cl, cc = tree_stats(ch)
        v += cv
        l += cl
        c = c or cc
    return v, l, c


def tree_to_str(tree) -> str:
    if isinstance(tree, Leaf):
        return {PSI: "eta", PSIBAR: "etabar", PHI: "xi"}[tree.species]
    if isinstance(tree, CVertex):
        return "cterm"
    kern = {PSI: "G", PSIBAR: "Gbar", PHI: "P"}[tree.species]
    return f"{kern}[" + ",".join(tree_to_str(c) for c in tree.children) + "]"


def permutation_parity(seq) -> int:
    """+1/-1 parity of a permutation given as a sequence of ints."""
    inv = 0
    n = len(seq)
    for i in range(n):
        for j in range(i + 1, n):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv & 1 else 1


# ---------------------------------------------------------------------------
# assembling integrands


@dataclass
class _Walk:
    n_times: int = 0
    n_slots: int = 0
    kernels: list = None
    leaves: list = None          # (species, time_ref, slot, node_id)
    n_vertices: int = 0
    n_cterms: int = 0
    node_children: dict = None   # node_id -> list of child node ids
    node_kind: dict = None       # node_id -> "leaf"/"vertex"/"cterm"
    next_node: int = 0

    def __post_init__(self):
        self.kernels = []
        self.leaves = []
        self.node_children = {}
        self.node_kind = {}

    def new_time(self) -> int:
        self.n_times += 1
        return self.n_times - 1

    def new_slot(self) -> int:
        self.n_slots += 1
        return self.n_slots - 1

    def new_node(self) -> int:
        self.next_node += 1
        return self.next_node - 1


EXT_TIME = -1  # time reference of the observation point (t = 0)


def _assemble(tree, walk: _Walk, time_ref: int, slot):
    """Walk a tree; returns this node's id (whose output edge carries the
    mode to be solved for later)."""
    node = walk.new_node()
    if isinstance(tree, Leaf):
        walk.node_kind[node] = "leaf"
        walk.leaves.append((tree.species, time_ref, slot, node))
        return node
    s = walk.new_time()
    if isinstance(tree, CVertex):
        walk.node_kind[node] = "cterm"
        walk.n_cterms += 1
        walk.kernels.append((PHI, time_ref, s, node, None, None))
        walk.node_children[node] = []
        return node
    walk.node_kind[node] = "vertex"
    walk.n_vertices += 1
    if tree.species in (PSI, PSIBAR):
        down = walk.new_slot()
        walk.kernels.append((tree.species, time_ref, s, node, slot, down))
        child_line = _assemble(tree.children[0], walk, s, down)
        child_bos = _assemble(tree.children[1], walk, s, None)
        walk.node_children[node] = [child_line, child_bos]
    else:
        walk.kernels.append((PHI, time_ref, s, node, None, None))
        w = walk.new_slot()
        child_bar = _assemble(tree.children[0], walk, s, w)
        child_line = _assemble(tree.children[1], walk, s, w)
        walk.node_children[node] = [child_bar, child_line]
    return node


def _fermionic_pairings(leaves):
    """All complete eta/etabar matchings with permutation-parity signs."""
    fpos = [k for k, lf in enumerate(leaves) if lf[0] in (PSI, PSIBAR)]
    etas = [k for k in fpos if leaves[k][0] == PSI]
    bars = [k for k in fpos if leaves[k][0] == PSIBAR]
    if len(etas) != len(bars):
        return
    order_of = {pos: i for i, pos in enumerate(fpos)}
    for perm in permutations(bars):
        pairs = list(zip(etas, perm))
        flat = []
        for a, b in sorted(pairs, key=lambda ab: min(ab)):
            flat.extend((order_of[min(a, b)], order_of[max(a, b)]))
        sign = permutation_parity(flat)
        orient = 1
        for a, b in pairs:
            if b < a:  # etabar precedes eta in the canonical order
                orient = -orient
        yield pairs, sign * orient


def _boson_pairings(positions):
    if not positions:
        yield []
        return
    if len(positions) % 2:
        return
    first, rest = positions[0], positions[1:]
    for k, other in enumerate(rest):
        for tail in _boson_pairings(rest[:k] + rest[k + 1:]):
            yield [(first, other)] + tail


def _mode_assignments(walk: _Walk, leaves, pair_sets, modeset: ToyModeSet,
                      root_nodes, root_modes):
    """Yield node_id -> mode-label maps consistent with conservation."""
    all_pairs = pair_sets
    for labels in product(range(len(modeset)), repeat=len(all_pairs)):
        modes = {}
        ok = True
        for (a, b), lab in zip(all_pairs, labels):
            modes[leaves[a][3]] = lab
            modes[leaves[b][3]] = lab

        def solve(node):
            if node in modes:
                return modes[node]
            if walk.node_kind[node] == "cterm":
                modes[node] = 0
                return 0
            kids = walk.node_children[node]
            lab = 0
            for kid in kids:
                lab = modeset.add(lab, solve(kid))
            modes[node] = lab
            return lab

        for rn, rm in zip(root_nodes, root_modes):
            if solve(rn) != rm:
                ok = False
                break
        if ok:
            yield modes


# ---------------------------------------------------------------------------
# numeric factor evaluation


class _ToyKernels:
    def __init__(self, modeset: ToyModeSet, params: ModelParams):
        self.modeset = modeset
        self.m = params.m
        self.M = params.M
        self.amats = [
            params.m * ID2 + 1j * slash(q) for q in modeset.modes
        ]
        self.abars = [
            params.m * ID2 + 1j * slash(q).T for q in modeset.modes
        ]
        self.smats = [euclidean_S(q, params.m) for q in modeset.modes]
        self.brates = [modeset.psq(i) + params.M**2 for i in range(len(modeset))]

    def kernel(self, species: str, lab: int, dts):
        """Retarded kernel of one species at a mode over time differences."""
        dts = np.asarray(dts, dtype=float)
        mask = dts >= 0.0
        if species == PHI:
            return np.exp(-self.brates[lab] * np.where(mask, dts, 0.0)) * mask
        amat = self.amats[lab] if species == PSI else self.abars[lab]
        return exp_batch(amat, np.where(mask, dts, 0.0)) * mask

    def pair_fermion(self, lab: int, dts):
        """<psi0(s) psibar0(s')> = S(q) exp(-(m + i pslash)|s - s'|)."""
        ad = np.abs(np.asarray(dts, dtype=float))
        return np.einsum("ij,jkn->ikn", self.smats[lab],
                         exp_batch(self.amats[lab], ad))

    def pair_boson(self, lab: int, dts):
        ad = np.abs(np.asarray(dts, dtype=float))
        return np.exp(-self.brates[lab] * ad) / self.brates[lab]


@dataclass
class _Term:
    """One fully resolved contribution: constant, kernels, pair factors."""

    const: float
    n_times: int
    n_slots: int
    kernels: list   # (species, hi_ref, lo_ref, mode_label, slot_hi, slot_lo)
    fpairs: list    # (ref_a, ref_b, label, slot_a (psi side), slot_b)
    bpairs: list    # (ref_a, ref_b, label)
    ext_slots: tuple


def _build_terms(observable: str, order: int, modeset: ToyModeSet,
                 params: ModelParams, p_label: int):
    """Enumerate every (tree pair, pairing, mode assignment) for an order."""
    cterm = toy_counterterm(modeset, params.m)
    specs = []
    if observable == "psi-psibar":
        for i in range(order + 1):
            for t1 in expand_fixpoint(PSI, i):
                for t2 in expand_fixpoint(PSIBAR, order - i):
                    specs.append(((t1, t2), (p_label, p_label)))
    elif observable == "phi":
        for t in expand_fixpoint(PHI, order):
            specs.append(((t,), (p_label,)))
    else:
        raise ValueError(observable)

    terms = []
    for trees, root_modes in specs:
        walk = _Walk()
        ext_slots = []
        roots = []
        for tree in trees:
            sp = tree.species if not isinstance(tree, CVertex) else PHI
            slot = walk.new_slot() if sp in (PSI, PSIBAR) else None
            ext_slots.append(slot)
            roots.append(_assemble(tree, walk, EXT_TIME, slot))
        leaves = walk.leaves
        xi_pos = [k for k, lf in enumerate(leaves) if lf[0] == PHI]
        for fpairs, fsign in _fermionic_pairings(leaves):
            for bpairs in _boson_pairings(xi_pos):
                pair_sets = fpairs + bpairs
                for modes in _mode_assignments(walk, leaves, pair_sets,
                                               modeset, roots, root_modes):
                    const = fsign * ((-1.0) ** walk.n_vertices) * (
                        cterm ** walk.n_cterms
                    )
                    kernels = [
                        (sp, hi, lo, modes[node], shi, slo)
                        for sp, hi, lo, node, shi, slo in walk.kernels
                    ]
                    fp = []
                    for a, b in fpairs:
                        la, lb = leaves[a], leaves[b]
                        fp.append((la[1], lb[1], modes[la[3]], la[2], lb[2]))
                    bp = []
                    for a, b in bpairs:
                        la, lb = leaves[a], leaves[b]
                        bp.append((la[1], lb[1], modes[la[3]]))
                    terms.append(_Term(
                        const=const,
                        n_times=walk.n_times,
                        n_slots=walk.n_slots,
                        kernels=kernels,
                        fpairs=fp,
                        bpairs=bp,
                        ext_slots=tuple(ext_slots),
                    ))
    return terms


def _eval_terms(terms, kern: _ToyKernels, times, out_shape):
    """Sum all terms at arrays of vertex times; returns (*out_shape, n)."""
    n = len(times[0]) if times else 1
    out = np.zeros(out_shape + (n,), dtype=complex)
    for term in terms:
        def tval(ref):
            return np.zeros(n) if ref == EXT_TIME else times[ref]

        mats = []
        scal = np.full(n, term.const, dtype=complex)
        for sp, hi, lo, lab, shi, slo in term.kernels:
            val = kern.kernel(sp, lab, tval(hi) - tval(lo))
            if sp == PHI:
                scal = scal * val
            else:
                mats.append((val, shi, slo))
        for ra, rb, lab, sa, sb in term.fpairs:
            mats.append((kern.pair_fermion(lab, tval(ra) - tval(rb)), sa, sb))
        for ra, rb, lab in term.bpairs:
            scal = scal * kern.pair_boson(lab, tval(ra) - tval(rb))

        free = [s for s in range(term.n_slots)
                if s not in term.ext_slots or term.ext_slots == ()]
        ext = [s for s in term.ext_slots if s is not None]
        for assign in product((0, 1), repeat=term.n_slots):
            piece = scal
            for val, shi, slo in mats:
                piece = piece * val[assign[shi], assign[slo]]
            if ext:
                idx = tuple(assign[s] for s in ext)
                out[idx] += piece
            else:
                out[()] += piece
    return out


def contract_and_integrate(observable: str, order: int, modeset: ToyModeSet,
                           params: ModelParams, p_label: int = 0,
                           T_cut: float = 15.0, tol: float = 1e-9):
    """Noise-averaged equal-time correlator contribution at one order.

    Wick pairings are summed exactly; the leaf-time convolutions are the
    closed-form stationary pair functions, so only vertex times remain
    and the integral is 0-, 1- or 2-dimensional over (-T_cut, 0]^k with
    adaptive panel refinement (split along the equal-time kink).
    Returns (value, quadrature_error): a 2x2 matrix for "psi-psibar", a
    scalar for "phi".
    """
    if order > 2:
        raise ValueError("time quadrature implemented for order <= 2")
    kern = _ToyKernels(modeset, params)
    terms = _build_terms(observable, order, modeset, params, p_label)
    out_shape = (2, 2) if observable == "psi-psibar" else ()
    if not terms:
        return np.zeros(out_shape, dtype=complex), 0.0
    k = terms[0].n_times
    if k == 0:
        val = _eval_terms(terms, kern, [], out_shape)[..., 0]
        return val, 0.0
    if k == 1:
        def f(s):
            return _eval_terms(terms, kern, [s], out_shape)

        val, err = integrate_refine(f, -T_cut, 0.0, tol=tol)
        return val, err

    def f2(s1, s2):
        return _eval_terms(terms, kern, [s1, s2], out_shape)

    val, err = integrate_box_refine(f2, -T_cut, tol=tol)
    return val, err


# ---------------------------------------------------------------------------
# equilibrium side: Gaussian moment expansion


def _pair_value(op1, op2, smats, brates):
    sp1, lab1, a1 = op1
    sp2, lab2, a2 = op2
    if sp1 == PHI and sp2 == PHI:
        return (1.0 / brates[lab1]) if lab1 == lab2 else 0.0
    if lab1 != lab2:
        return 0.0
    if sp1 == PSI and sp2 == PSIBAR:
        return smats[lab1][a1, a2]
    if sp1 == PSIBAR and sp2 == PSI:
        return -smats[lab1][a2, a1]
    return 0.0


def _moment(ops, smats, brates):
    """Free Gaussian moment of a mixed operator list, by recursive Wick."""
    if not ops:
        return 1.0
    if len(ops) % 2:
        return 0.0
    first, rest = ops[0], ops[1:]
    fermionic = first[0] in (PSI, PSIBAR)
    total = 0.0
    for j, other in enumerate(rest):
        val = _pair_value(first, other, smats, brates)
        if val == 0.0:
            continue
        if fermionic:
            between = sum(1 for k in range(j) if rest[k][0] in (PSI, PSIBAR))
            sign = -1.0 if between & 1 else 1.0
        else:
            sign = 1.0
        sub = _moment(rest[:j] + rest[j + 1:], smats, brates)
        total = total + sign * val * sub
    return total


def _interaction_monomials(modeset: ToyModeSet, m: float):
    """The coupling-linear part of the action as (coeff, ops) monomials."""
    mono = []
    n = len(modeset)
    for q in range(n):
        for qp in range(n):
            for r in range(n):
                if modeset.add(qp, r) != q:
                    continue
                for alpha in range(2):
                    mono.append((1.0, [(PSIBAR, q, alpha), (PSI, qp, alpha),
                                       (PHI, r, None)]))
    mono.append((-toy_counterterm(modeset, m), [(PHI, 0, None)]))
    return mono


def diagrammatic_oracle(observable: str, order: int, modeset: ToyModeSet,
                        params: ModelParams, p_label: int = 0):
    """Equilibrium correlator contribution at one coupling order.

    Expands <obs exp(-W)> / <exp(-W)> in Gaussian moments of the toy
    action; all Wick contractions are enumerated exactly, with the
    fermion-loop signs emerging from the recursion.
    """
    if order > 2:
        raise ValueError("moment expansion implemented for order <= 2")
    kern = _ToyKernels(modeset, params)
    smats, brates = kern.smats, kern.brates
    mono = _interaction_monomials(modeset, params.m)

    def ext_ops(i, j):
        if observable == "psi-psibar":
            return [(PSI, p_label, i), (PSIBAR, p_label, j)]
        if observable == "phi":
            return [(PHI, p_label, None)]
        raise ValueError(observable)

    def insertion_sets(k):
        """(coefficient, ops) pairs for (-W)^k / k!."""
        if k == 0:
            yield 1.0, []
        elif k == 1:
            for c, ops in mono:
                yield -c, list(ops)
        else:
            for c1, o1 in mono:
                for c2, o2 in mono:
                    yield 0.5 * c1 * c2, list(o1) + list(o2)

    def numerator(k, i, j):
        total = 0.0
        for coeff, ops in insertion_sets(k):
            total = total + coeff * _moment(ext_ops(i, j) + ops, smats, brates)
        return total

    def vacuum(k):
        total = 0.0
        for coeff, ops in insertion_sets(k):
            total = total + coeff * _moment(ops, smats, brates)
        return total

    shape = (2, 2) if observable == "psi-psibar" else ()
    idx_iter = (
        [(i, j) for i in range(2) for j in range(2)]
        if observable == "psi-psibar" else [(None, None)]
    )
    out = np.zeros(shape, dtype=complex)
    d1 = vacuum(1)
    d2 = vacuum(2) if order >= 2 else 0.0
    for i, j in idx_iter:
        n0 = numerator(0, i, j)
        if order == 0:
            val = n0
        elif order == 1:
            val = numerator(1, i, j) - n0 * d1
        else:
            val = (numerator(2, i, j) - numerator(1, i, j) * d1
                   - n0 * d2 + n0 * d1 * d1)
        if observable == "psi-psibar":
            out[i, j] = val
        else:
            out = np.asarray(val, dtype=complex)
    return out


# ---------------------------------------------------------------------------
# the order-by-order comparison


@dataclass(frozen=True)
class OrderComparison:
    order: int
    lhs: np.ndarray
    rhs: np.ndarray
    diff: float
    budget: float
    passed: bool


def lemma_budget(params: ModelParams, T_cut: float, quad_err: float) -> float:
    rate = 2.0 * min(params.m, params.M**2)
    return 10.0 * (quad_err + np.exp(-rate * T_cut)) + 1e-12


def compare_order(order: int, modeset: ToyModeSet, params: ModelParams,
                  p_label: int = 0, T_cut: float = 15.0,
                  tol: float = 1e-9) -> OrderComparison:
    """Langevin-side trees versus equilibrium moments at one order."""
    lhs, err = contract_and_integrate(
        "psi-psibar", order, modeset, params, p_label, T_cut, tol
    )
    rhs = diagrammatic_oracle("psi-psibar", order, modeset, params, p_label)
    diff = float(np.max(np.abs(lhs - rhs)))
    budget = lemma_budget(params, T_cut, err)
    return OrderComparison(order, lhs, rhs, diff, budget, diff <= budget)


def phi_tadpole(modeset: ToyModeSet, params: ModelParams,
                T_cut: float = 15.0, tol: float = 1e-9):
    """Order-one expectation of the boson field; cancels exactly when the
    counterterm equals the free fermion loop."""
    val, err = contract_and_integrate("phi", 1, modeset, params, 0, T_cut, tol)
    return complex(val), err


def dump_trees(path: str, max_order: int = 2) -> None:
    with open(path, "w") as fh:
        for species in (PSI, PSIBAR, PHI):
            for order in range(max_order + 1):
                trees = expand_fixpoint(species, order)
                fh.write(f"{species} order {order}: {len(trees)} trees "
                         f"(count oracle {tree_count(species, order)})\n")
                for t in trees:
                    v, l, c = tree_stats(t)
                    fh.write(f"  {tree_to_str(t)}  vertices={v} leaves={l}"
                             f"{' counterterm' if c else ''}\n")
