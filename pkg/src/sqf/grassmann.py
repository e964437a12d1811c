"""Finite Grassmann algebra with Berezin calculus.

Elements are sparse multivectors over N anticommuting generators indexed
0..N-1.  Coefficients may be exact ints/Fractions, floats/complex, or
sparse multivariate polynomials in commuting (bosonic) symbols, so the
same engine serves both exact identity checks and double-precision
generating functionals.

Conventions fixed here and relied on everywhere else:
  * stored index tuples are strictly increasing (canonical form),
  * a multi-index Berezin integral applies the rightmost listed
    integration variable first, and a single integral d g_i acts as the
    right derivative with respect to g_i (so that, with dg1 applied
    first, the iterated integral of g1 g2 against dg2 dg1 equals -1),
  * the fermionic Gaussian integral uses the interleaved measure
    [dgbar_0 dg_0 dgbar_1 dg_1 ...] (rightmost applied first).
"""

from __future__ import annotations

from enum import Enum
from itertools import combinations


# ---------------------------------------------------------------------------
# polynomial coefficients


def _scalar_is_zero(c) -> bool:
    if isinstance(c, Polynomial):
        return c.is_zero()
    return c == 0


def _scalar_conj(c):
    if isinstance(c, complex):
        return c.conjugate()
    return c


class Polynomial:
    """Sparse polynomial in `nsym` commuting symbols.

    Terms map exponent tuples (length nsym) to scalar coefficients.
    """

    __slots__ = ("nsym", "terms")

    def __init__(self, nsym: int, terms: dict | None = None):
        self.nsym = nsym
        self.terms = {}
        if terms:
            for expo, c in terms.items():
                if not _scalar_is_zero(c):
                    self.terms[tuple(expo)] = c

    @classmethod
    def const(cls, c, nsym: int) -> "Polynomial":
        return cls(nsym, {(0,) * nsym: c})

    @classmethod
    def symbol(cls, i: int, nsym: int, coeff=1) -> "Polynomial":
        expo = [0] * nsym
        expo[i] = 1
        return cls(nsym, {tuple(expo): coeff})

    def is_zero(self) -> bool:
        return not self.terms

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nsym != self.nsym:
                raise ValueError("symbol count mismatch")
            return other
        return Polynomial.const(other, self.nsym)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for expo, c in other.terms.items():
            s = out.get(expo, 0) + c
            if _scalar_is_zero(s):
                out.pop(expo, None)
            else:
                out[expo] = s
        return Polynomial(self.nsym, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nsym, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            if _scalar_is_zero(other):
                return Polynomial(self.nsym)
            return Polynomial(
                self.nsym, {e: c * other for e, c in self.terms.items()}
            )
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = out.get(e, 0) + c1 * c2
                if _scalar_is_zero(s):
                    out.pop(e, None)
                else:
                    out[e] = s
        return Polynomial(self.nsym, out)

    __rmul__ = __mul__

    def diff(self, i: int) -> "Polynomial":
        out = {}
        for expo, c in self.terms.items():
            k = expo[i]
            if k == 0:
                continue
            e = list(expo)
            e[i] = k - 1
            out[tuple(e)] = c * k
        return Polynomial(self.nsym, out)

    def subs(self, values) -> complex:
        """Evaluate at numeric symbol values."""
        total = 0
        for expo, c in self.terms.items():
            v = c
            for i, k in enumerate(expo):
                for _ in range(k):
                    v = v * values[i]
            total = total + v
        return total

    def map_symbols(self, perm, scale=None) -> "Polynomial":
        """Substitute symbol i -> scale[i] * symbol perm[i]."""
        out: dict = {}
        for expo, c in self.terms.items():
            e = [0] * self.nsym
            v = c
            for i, k in enumerate(expo):
                e[perm[i]] += k
                if scale is not None and k:
                    v = v * scale[i] ** k
            key = tuple(e)
            s = out.get(key, 0) + v
            if _scalar_is_zero(s):
                out.pop(key, None)
            else:
                out[key] = s
        return Polynomial(self.nsym, out)

    def conj(self) -> "Polynomial":
        return Polynomial(
            self.nsym, {e: _scalar_conj(c) for e, c in self.terms.items()}
        )

    def truncate(self, maxdeg: int) -> "Polynomial":
        return Polynomial(
            self.nsym,
            {e: c for e, c in self.terms.items() if sum(e) <= maxdeg},
        )

    def max_abs(self) -> float:
        if not self.terms:
            return 0.0
        return max(abs(complex(c)) for c in self.terms.values())

    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.nsym == other.nsym and self.terms == other.terms
        return (self - other).is_zero()

    def __repr__(self):
        return f"Polynomial({self.nsym}, {self.terms!r})"


# ---------------------------------------------------------------------------
# multivectors


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


def _merge_sign(t1: tuple, t2: tuple):
    """Merge two ascending index tuples with the Koszul sign.

    Returns (merged, sign); a repeated index gives (None, 0).
    """
    i, j = 0, 0
    n1, n2 = len(t1), len(t2)
    out = []
    sign = 1
    while i < n1 and j < n2:
        a, b = t1[i], t2[j]
        if a == b:
            return None, 0
        if a < b:
            out.append(a)
            i += 1
        else:
            out.append(b)
            j += 1
            if (n1 - i) & 1:
                sign = -sign
    out.extend(t1[i:])
    out.extend(t2[j:])
    return tuple(out), sign


class GrassmannElement:
    """Sparse multivector: maps ascending generator-index tuples to coefficients."""

    __slots__ = ("ngen", "terms")

    def __init__(self, ngen: int, terms: dict | None = None):
        self.ngen = ngen
        self.terms = {}
        if terms:
            for idx, c in terms.items():
                if not _scalar_is_zero(c):
                    self.terms[tuple(idx)] = c

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, ngen: int) -> "GrassmannElement":
        return cls(ngen)

    @classmethod
    def scalar(cls, c, ngen: int) -> "GrassmannElement":
        return cls(ngen, {(): c})

    @classmethod
    def generator(cls, i: int, ngen: int, coeff=1) -> "GrassmannElement":
        if not 0 <= i < ngen:
            raise IndexError("generator index out of range")
        return cls(ngen, {(i,): coeff})

    # -- ring operations ---------------------------------------------------

    def _check(self, other: "GrassmannElement"):
        if self.ngen != other.ngen:
            raise ValueError("mismatched generator counts")

    def __add__(self, other: "GrassmannElement") -> "GrassmannElement":
        self._check(other)
        out = dict(self.terms)
        for idx, c in other.terms.items():
            s = out.get(idx, 0) + c
            if _scalar_is_zero(s):
                out.pop(idx, None)
            else:
                out[idx] = s
        return GrassmannElement(self.ngen, out)

    def __neg__(self) -> "GrassmannElement":
        return GrassmannElement(
            self.ngen, {idx: -c for idx, c in self.terms.items()}
        )

    def __sub__(self, other: "GrassmannElement") -> "GrassmannElement":
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, GrassmannElement):
            return self.scale(other)
        self._check(other)
        out: dict = {}
        for i1, c1 in self.terms.items():
            for i2, c2 in other.terms.items():
                idx, sign = _merge_sign(i1, i2)
                if sign == 0:
                    continue
                c = c1 * c2
                if sign < 0:
                    c = -c
                s = out.get(idx, 0) + c
                if _scalar_is_zero(s):
                    out.pop(idx, None)
                else:
                    out[idx] = s
        return GrassmannElement(self.ngen, out)

    def __rmul__(self, other):
        # scalars and polynomials commute with everything
        return self.scale(other)

    def scale(self, c) -> "GrassmannElement":
        if _scalar_is_zero(c):
            return GrassmannElement(self.ngen)
        return GrassmannElement(
            self.ngen, {idx: c * v for idx, v in self.terms.items()}
        )

    # -- structure ---------------------------------------------------------

    def scalar_part(self):
        return self.terms.get((), 0)

    def is_zero(self) -> bool:
        return not self.terms

    def grades(self) -> set:
        return {len(idx) for idx in self.terms}

    def parity(self) -> int:
        """0 or 1 for homogeneous elements; raises on mixed parity."""
        ps = {len(idx) & 1 for idx in self.terms}
        if not ps:
            return 0
        if len(ps) > 1:
            raise ValueError("element has mixed Grassmann parity")
        return ps.pop()

    def is_homogeneous_parity(self) -> bool:
        return len({len(idx) & 1 for idx in self.terms}) <= 1

    def max_abs(self) -> float:
        m = 0.0
        for c in self.terms.values():
            if isinstance(c, Polynomial):
                m = max(m, c.max_abs())
            else:
                m = max(m, abs(complex(c)))
        return m

    def map_coefficients(self, fn) -> "GrassmannElement":
        return GrassmannElement(
            self.ngen, {idx: fn(c) for idx, c in self.terms.items()}
        )

    def substitute(self, images: dict, ngen_out: int | None = None,
                   coeff_fn=None) -> "GrassmannElement":
        """Algebra homomorphism g_i -> images[i] (odd elements).

        Generators absent from `images` map to themselves.  `coeff_fn`
        is applied to every coefficient (e.g. complex conjugation for
        anti-linear maps).
        """
        ngen_out = self.ngen if ngen_out is None else ngen_out
        acc = GrassmannElement(ngen_out)
        for idx, c in self.terms.items():
            if coeff_fn is not None:
                c = coeff_fn(c)
            term = GrassmannElement.scalar(c, ngen_out)
            for i in idx:
                img = images.get(i)
                if img is None:
                    img = GrassmannElement.generator(i, ngen_out)
                term = term * img
            acc = acc + term
        return acc

    def __eq__(self, other):
        if not isinstance(other, GrassmannElement):
            return NotImplemented
        return self.ngen == other.ngen and (self - other).is_zero()

    def __repr__(self):
        items = ", ".join(f"{idx}: {c!r}" for idx, c in sorted(self.terms.items()))
        return f"GrassmannElement({self.ngen}, {{{items}}})"


# ---------------------------------------------------------------------------
# calculus


def derive(a: GrassmannElement, i: int, side: Side = Side.LEFT) -> GrassmannElement:
    """Left/right derivative with respect to generator i.

    The left derivative anticommutes g_i to the front of each monomial
    and strikes it; the right derivative moves it to the back.
    """
    if not 0 <= i < a.ngen:
        raise IndexError("generator index out of range")
    out: dict = {}
    for idx, c in a.terms.items():
        try:
            pos = idx.index(i)
        except ValueError:
            continue
        if side is Side.LEFT:
            sign = -1 if pos & 1 else 1
        else:
            sign = -1 if (len(idx) - 1 - pos) & 1 else 1
        key = idx[:pos] + idx[pos + 1:]
        s = out.get(key, 0) + (c if sign > 0 else -c)
        if _scalar_is_zero(s):
            out.pop(key, None)
        else:
            out[key] = s
    return GrassmannElement(a.ngen, out)


def berezin(a: GrassmannElement, indices) -> GrassmannElement:
    """Iterated Berezin integral; rightmost listed index is applied first.

    A single integral acts as the right derivative, which fixes every
    sign downstream (e.g. dg2 dg1 applied to g1 g2 gives -1).
    """
    indices = list(indices)
    if len(set(indices)) != len(indices):
        raise ValueError("repeated integration index")
    out = a
    for i in reversed(indices):
        out = derive(out, i, Side.RIGHT)
    return out


def _is_exactish(elem: GrassmannElement) -> bool:
    from fractions import Fraction

    def ok(c):
        if isinstance(c, Polynomial):
            return all(isinstance(v, (int, Fraction)) for v in c.terms.values())
        return isinstance(c, (int, Fraction))

    return all(ok(c) for c in elem.terms.values())


def exp_nilpotent(a: GrassmannElement) -> GrassmannElement:
    """exp of an even element with no scalar part (series terminates)."""
    from fractions import Fraction

    if a.is_zero():
        return GrassmannElement.scalar(1, a.ngen)
    if a.parity() != 0 or not _scalar_is_zero(a.scalar_part()):
        raise ValueError("exponent must be even with zero scalar part")
    exact = _is_exactish(a)
    acc = GrassmannElement.scalar(1, a.ngen)
    power = GrassmannElement.scalar(1, a.ngen)
    k = 0
    while True:
        power = power * a
        if power.is_zero():
            break
        k += 1
        coeff = Fraction(1, _factorial(k)) if exact else 1.0 / _factorial(k)
        acc = acc + power.scale(coeff)
    return acc


def gaussian_berezin(a_matrix, theta_bar, theta, eta_bar=None, eta=None,
                     ngen: int | None = None) -> GrassmannElement:
    """Fermionic Gaussian integral with sources, organized by minors.

    Computes  integral exp(-tbar^T A t + tbar.eta + etabar.t)  over the
    interleaved measure [d tbar_0 d t_0 d tbar_1 d t_1 ...], where tbar,
    t are the generators listed in `theta_bar`, `theta` and eta/eta_bar
    are odd elements free of those generators.  Under this measure the
    value is (-1)^n det(A) exp(etabar^T A^-1 eta); the overall sign is a
    fixed measure constant that drops out of any normalized quantity.
    Rather than expanding one big exponential, the integral is
    assembled subset by subset (the rows/columns soaked up by sources
    versus by the quadratic form), which is the minor expansion of the
    closed form and needs no division, so exact coefficients stay exact.
    """
    from fractions import Fraction

    n = len(theta_bar)
    if len(theta) != n:
        raise ValueError("theta/theta_bar length mismatch")
    if (eta is None) != (eta_bar is None):
        raise ValueError("provide both eta and eta_bar, or neither")
    if ngen is None:
        if eta:
            ngen = eta[0].ngen
        else:
            raise ValueError("ngen required when no sources are given")

    def quad_term(l, mm):
        c = a_matrix[l][mm]
        tb = GrassmannElement.generator(theta_bar[l], ngen)
        tt = GrassmannElement.generator(theta[mm], ngen)
        if isinstance(c, GrassmannElement):
            if c.parity() != 0:
                raise ValueError("odd-graded entry in quadratic form")
            return tb * c * tt
        if _scalar_is_zero(c):
            return None
        return (tb * tt).scale(c)

    measure = []
    for tb, t in zip(theta_bar, theta):
        measure.extend((tb, t))

    one = GrassmannElement.scalar(1, ngen)
    total = GrassmannElement(ngen)
    kmax = n if eta is not None else 0
    for k in range(kmax + 1):
        for t_rows in combinations(range(n), k):   # theta_bar's soaked by sources
            for s_cols in combinations(range(n), k):
                r_rows = [i for i in range(n) if i not in t_rows]
                c_cols = [j for j in range(n) if j not in s_cols]
                m = len(r_rows)
                quad = GrassmannElement(ngen)
                for l in r_rows:
                    for mm in c_cols:
                        t = quad_term(l, mm)
                        if t is not None:
                            quad = quad - t
                if m:
                    power = one
                    for _ in range(m):
                        power = power * quad
                    if power.is_zero():
                        continue
                    piece = power.scale(
                        Fraction(1, _factorial(m)) if _is_exactish(power)
                        else 1.0 / _factorial(m)
                    )
                else:
                    piece = one
                for i in t_rows:
                    piece = piece * (
                        GrassmannElement.generator(theta_bar[i], ngen) * eta[i]
                    )
                for j in s_cols:
                    piece = piece * (
                        eta_bar[j] * GrassmannElement.generator(theta[j], ngen)
                    )
                total = total + berezin(piece, measure)
    return total


def _factorial(m: int) -> int:
    out = 1
    for i in range(2, m + 1):
        out *= i
    return out
