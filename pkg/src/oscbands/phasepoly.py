"""Sparse polynomials on phase space R^{2n} with complex coefficients.

Terms are stored against exponent pairs (alpha, beta), where alpha are the
x-exponents and beta the p-exponents.  Zero coefficients are never stored;
every arithmetic operation returns canonical values.  All coefficient
comparisons in tests use a 1e-12 tolerance after canonicalization.
"""

from __future__ import annotations

import math
from functools import lru_cache
import numpy as np

COEFF_TOL = 1e-12


class DimensionMismatchError(ValueError):
    pass


def _as_tuple(idx) -> tuple[int, ...]:
    t = tuple(int(i) for i in idx)
    if any(i < 0 for i in t):
        raise ValueError(f"negative exponent in {idx!r}")
    return t


class PhasePolynomial:
    """Polynomial in (x_1..x_n, p_1..p_n), complex coefficients, sparse."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict | None = None):
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        self.dim = int(dim)
        clean: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}
        if terms:
            for (alpha, beta), c in terms.items():
                alpha = _as_tuple(alpha)
                beta = _as_tuple(beta)
                if len(alpha) != self.dim or len(beta) != self.dim:
                    raise DimensionMismatchError(
                        f"exponent length != dim={self.dim}: {alpha}, {beta}")
                c = complex(c)
                if c != 0:
                    key = (alpha, beta)
                    prev = clean.get(key, 0j) + c
                    if prev == 0:
                        clean.pop(key, None)
                    else:
                        clean[key] = prev
        self.terms = clean

    # ------------------------------------------------------------------
    # constructors
    @staticmethod
    def zero(dim: int) -> "PhasePolynomial":
        return PhasePolynomial(dim)

    @staticmethod
    def constant(dim: int, c) -> "PhasePolynomial":
        z = (0,) * dim
        return PhasePolynomial(dim, {(z, z): complex(c)})

    @staticmethod
    def x(i: int, dim: int) -> "PhasePolynomial":
        a = [0] * dim
        a[i] = 1
        return PhasePolynomial(dim, {(tuple(a), (0,) * dim): 1.0})

    @staticmethod
    def p(i: int, dim: int) -> "PhasePolynomial":
        b = [0] * dim
        b[i] = 1
        return PhasePolynomial(dim, {((0,) * dim, tuple(b)): 1.0})

    @staticmethod
    def monomial(dim: int, alpha, beta, coeff=1.0) -> "PhasePolynomial":
        return PhasePolynomial(dim, {(_as_tuple(alpha), _as_tuple(beta)): coeff})

    @staticmethod
    def oscillator_energy(dim: int) -> "PhasePolynomial":
        """H0 = (|x|^2 + |p|^2)/2."""
        terms = {}
        for i in range(dim):
            a = [0] * dim
            a[i] = 2
            terms[(tuple(a), (0,) * dim)] = 0.5
            terms[((0,) * dim, tuple(a))] = 0.5
        return PhasePolynomial(dim, terms)

    # ------------------------------------------------------------------
    # ring operations
    def _check_dim(self, other: "PhasePolynomial"):
        if self.dim != other.dim:
            raise DimensionMismatchError(f"dim {self.dim} != {other.dim}")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PhasePolynomial.constant(self.dim, other)
        if not isinstance(other, PhasePolynomial):
            return NotImplemented
        self._check_dim(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, 0j) + c
            if s == 0:
                out.pop(k, None)
            else:
                out[k] = s
        res = PhasePolynomial(self.dim)
        res.terms = out
        return res

    __radd__ = __add__

    def __neg__(self):
        res = PhasePolynomial(self.dim)
        res.terms = {k: -c for k, c in self.terms.items()}
        return res

    def __sub__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PhasePolynomial.constant(self.dim, other)
        if not isinstance(other, PhasePolynomial):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            if other == 0:
                return PhasePolynomial(self.dim)
            res = PhasePolynomial(self.dim)
            res.terms = {k: c * other for k, c in self.terms.items()}
            return res
        if not isinstance(other, PhasePolynomial):
            return NotImplemented
        self._check_dim(other)
        out: dict = {}
        get = out.get
        items2 = list(other.terms.items())
        if self.dim == 1:
            for (a1, b1), c1 in self.terms.items():
                av, bv = a1[0], b1[0]
                for (a2, b2), c2 in items2:
                    key = ((av + a2[0],), (bv + b2[0],))
                    s = get(key, 0j) + c1 * c2
                    if s == 0:
                        out.pop(key, None)
                    else:
                        out[key] = s
        elif self.dim == 2:
            for (a1, b1), c1 in self.terms.items():
                a10, a11, b10, b11 = a1[0], a1[1], b1[0], b1[1]
                for (a2, b2), c2 in items2:
                    key = ((a10 + a2[0], a11 + a2[1]), (b10 + b2[0], b11 + b2[1]))
                    s = get(key, 0j) + c1 * c2
                    if s == 0:
                        out.pop(key, None)
                    else:
                        out[key] = s
        else:
            for (a1, b1), c1 in self.terms.items():
                for (a2, b2), c2 in items2:
                    key = (tuple(i + j for i, j in zip(a1, a2)),
                           tuple(i + j for i, j in zip(b1, b2)))
                    s = get(key, 0j) + c1 * c2
                    if s == 0:
                        out.pop(key, None)
                    else:
                        out[key] = s
        res = PhasePolynomial(self.dim)
        res.terms = out
        return res

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = PhasePolynomial.constant(self.dim, 1.0)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # ------------------------------------------------------------------
    # calculus
    def diff_x(self, i: int) -> "PhasePolynomial":
        out = {}
        for (a, b), c in self.terms.items():
            if a[i] == 0:
                continue
            a2 = list(a)
            a2[i] -= 1
            out[(tuple(a2), b)] = out.get((tuple(a2), b), 0j) + c * a[i]
        res = PhasePolynomial(self.dim)
        res.terms = {k: v for k, v in out.items() if v != 0}
        return res

    def diff_p(self, i: int) -> "PhasePolynomial":
        out = {}
        for (a, b), c in self.terms.items():
            if b[i] == 0:
                continue
            b2 = list(b)
            b2[i] -= 1
            out[(a, tuple(b2))] = out.get((a, tuple(b2)), 0j) + c * b[i]
        res = PhasePolynomial(self.dim)
        res.terms = {k: v for k, v in out.items() if v != 0}
        return res

    # ------------------------------------------------------------------
    # structure
    def degree(self) -> int:
        """Max total degree |alpha|+|beta| over stored terms; -1 for zero."""
        if not self.terms:
            return -1
        return max(sum(a) + sum(b) for a, b in self.terms)

    def is_zero(self, tol: float = 0.0) -> bool:
        if tol == 0.0:
            return not self.terms
        return all(abs(c) <= tol for c in self.terms.values())

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def chop(self, tol: float = COEFF_TOL) -> "PhasePolynomial":
        res = PhasePolynomial(self.dim)
        res.terms = {k: c for k, c in self.terms.items() if abs(c) > tol}
        return res

    def homogeneous_part(self, d: int) -> "PhasePolynomial":
        res = PhasePolynomial(self.dim)
        res.terms = {k: c for k, c in self.terms.items()
                     if sum(k[0]) + sum(k[1]) == d}
        return res

    def homogeneous_parts(self) -> dict[int, "PhasePolynomial"]:
        parts: dict[int, PhasePolynomial] = {}
        for (a, b), c in self.terms.items():
            d = sum(a) + sum(b)
            parts.setdefault(d, PhasePolynomial(self.dim)).terms[(a, b)] = c
        return parts

    def real_part(self) -> "PhasePolynomial":
        res = PhasePolynomial(self.dim)
        res.terms = {k: complex(c.real) for k, c in self.terms.items()
                     if c.real != 0}
        return res

    def conjugate_coeffs(self) -> "PhasePolynomial":
        res = PhasePolynomial(self.dim)
        res.terms = {k: c.conjugate() for k, c in self.terms.items()}
        return res

    def evaluate(self, xs, ps) -> complex:
        xs = np.atleast_1d(np.asarray(xs, dtype=complex))
        ps = np.atleast_1d(np.asarray(ps, dtype=complex))
        if xs.shape[-1] != self.dim or ps.shape[-1] != self.dim:
            raise DimensionMismatchError("point dimension mismatch")
        total = 0j
        for (a, b), c in self.terms.items():
            v = c
            for i in range(self.dim):
                if a[i]:
                    v = v * xs[..., i] ** a[i]
                if b[i]:
                    v = v * ps[..., i] ** b[i]
            total = total + v
        return total

    def __eq__(self, other):
        if not isinstance(other, PhasePolynomial):
            return NotImplemented
        return self.dim == other.dim and self.terms == other.terms

    def isclose(self, other: "PhasePolynomial", tol: float = COEFF_TOL) -> bool:
        self._check_dim(other)
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0j) - other.terms.get(k, 0j)) <= tol
                   for k in keys)

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return f"PhasePolynomial(dim={self.dim}, 0)"
        bits = []
        for (a, b), c in sorted(self.terms.items()):
            mono = []
            for i, e in enumerate(a):
                if e:
                    mono.append(f"x{i}^{e}" if e > 1 else f"x{i}")
            for i, e in enumerate(b):
                if e:
                    mono.append(f"p{i}^{e}" if e > 1 else f"p{i}")
            bits.append(f"({c:.6g})" + ("*" + "*".join(mono) if mono else ""))
        return " + ".join(bits)

    # ------------------------------------------------------------------
    # complex coordinates z = x + ip
    def to_complex_basis(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], complex]:
        """Rewrite in monomials z^a zbar^b, z_i = x_i + i p_i.

        Returns the coefficient map {(a, b): coeff}.  Both conversions are
        assembled from cached per-monomial expansions.
        """
        out: dict = {}
        for (alpha, beta), coeff in self.terms.items():
            for key, c in _monomial_to_z(self.dim, alpha, beta):
                s = out.get(key, 0j) + coeff * c
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        return {k: v for k, v in out.items() if v != 0}

    @staticmethod
    def from_complex_basis(dim: int, zterms: dict) -> "PhasePolynomial":
        """Inverse of :meth:`to_complex_basis` (z = x+ip, zbar = x-ip)."""
        out: dict = {}
        for (za, zb), coeff in zterms.items():
            for key, c in _monomial_from_z(dim, tuple(za), tuple(zb)):
                s = out.get(key, 0j) + coeff * c
                if s == 0:
                    out.pop(key, None)
                else:
                    out[key] = s
        result = PhasePolynomial(dim)
        result.terms = {k: c for k, c in out.items() if c != 0}
        return result

    # ------------------------------------------------------------------
    # JSON form: {dim, terms: [{ax, ap, re, im}]}
    def to_json_dict(self) -> dict:
        entries = []
        for (a, b), c in sorted(self.terms.items()):
            entries.append({"ax": list(a), "ap": list(b),
                            "re": c.real, "im": c.imag})
        return {"dim": self.dim, "terms": entries}

    @staticmethod
    def from_json_dict(d: dict) -> "PhasePolynomial":
        dim = int(d["dim"])
        terms = {}
        for e in d["terms"]:
            key = (_as_tuple(e["ax"]), _as_tuple(e["ap"]))
            terms[key] = terms.get(key, 0j) + complex(e.get("re", 0.0), e.get("im", 0.0))
        return PhasePolynomial(dim, terms)


class ExpPolySymbol:
    """Symbol of the form prefactor(x,p) * exp(rate * H0).

    Closed under x/p-derivatives and under multiplication by polynomials;
    the derivative of exp(rate*H0) contributes rate*x_i (or rate*p_i) times
    itself.
    """

    __slots__ = ("prefactor", "rate")

    def __init__(self, prefactor: PhasePolynomial, rate: complex):
        self.prefactor = prefactor
        self.rate = complex(rate)

    @property
    def dim(self) -> int:
        return self.prefactor.dim

    @staticmethod
    def pure(dim: int, rate: complex) -> "ExpPolySymbol":
        return ExpPolySymbol(PhasePolynomial.constant(dim, 1.0), rate)

    def diff_x(self, i: int) -> "ExpPolySymbol":
        extra = PhasePolynomial.x(i, self.dim) * self.prefactor * self.rate
        return ExpPolySymbol(self.prefactor.diff_x(i) + extra, self.rate)

    def diff_p(self, i: int) -> "ExpPolySymbol":
        extra = PhasePolynomial.p(i, self.dim) * self.prefactor * self.rate
        return ExpPolySymbol(self.prefactor.diff_p(i) + extra, self.rate)

    def __add__(self, other):
        if isinstance(other, ExpPolySymbol):
            if other.rate != self.rate:
                raise ValueError("cannot add exponential symbols of different rates")
            return ExpPolySymbol(self.prefactor + other.prefactor, self.rate)
        return NotImplemented

    def __neg__(self):
        return ExpPolySymbol(-self.prefactor, self.rate)

    def __sub__(self, other):
        if isinstance(other, ExpPolySymbol):
            return self + (-other)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, ExpPolySymbol):
            return ExpPolySymbol(self.prefactor * other.prefactor,
                                 self.rate + other.rate)
        if isinstance(other, (int, float, complex, PhasePolynomial)):
            return ExpPolySymbol(self.prefactor * other, self.rate)
        return NotImplemented

    __rmul__ = __mul__

    def isclose(self, other: "ExpPolySymbol", tol: float = COEFF_TOL) -> bool:
        return (abs(self.rate - other.rate) <= tol
                and self.prefactor.isclose(other.prefactor, tol))

    def evaluate(self, xs, ps) -> complex:
        h0 = 0.5 * (np.sum(np.asarray(xs, dtype=complex) ** 2)
                    + np.sum(np.asarray(ps, dtype=complex) ** 2))
        return self.prefactor.evaluate(xs, ps) * np.exp(self.rate * h0)

    def __repr__(self):
        return f"({self.prefactor!r}) * exp(({self.rate:.6g})*H0)"


@lru_cache(maxsize=500000)
def _monomial_to_z(dim: int, alpha: tuple, beta: tuple) -> tuple:
    """Expansion of x^alpha p^beta in z/zbar monomials (cached)."""
    partial = {((0,) * dim, (0,) * dim): 1.0 + 0j}
    for i in range(dim):
        ai, bi = alpha[i], beta[i]
        if ai == 0 and bi == 0:
            continue
        # x_i^ai = sum_j C(ai,j) (1/2)^ai z^j zbar^(ai-j)
        # p_i^bi = sum_k C(bi,k) (1/(2i))^bi (-1)^(bi-k) z^k zbar^(bi-k)
        factor: dict[tuple[int, int], complex] = {}
        for j in range(ai + 1):
            cx = math.comb(ai, j) * 0.5 ** ai
            for k in range(bi + 1):
                cp = math.comb(bi, k) * (-0.5j) ** bi * (-1) ** (bi - k)
                key = (j + k, (ai - j) + (bi - k))
                factor[key] = factor.get(key, 0j) + cx * cp
        new_partial: dict = {}
        for (za, zb), c0 in partial.items():
            for (u, v), c1 in factor.items():
                za2 = list(za)
                zb2 = list(zb)
                za2[i] += u
                zb2[i] += v
                key = (tuple(za2), tuple(zb2))
                new_partial[key] = new_partial.get(key, 0j) + c0 * c1
        partial = new_partial
    return tuple((k, c) for k, c in partial.items() if c != 0)


@lru_cache(maxsize=500000)
def _monomial_from_z(dim: int, za: tuple, zb: tuple) -> tuple:
    """Expansion of z^za zbar^zb in x/p monomials (cached)."""
    partial = {((0,) * dim, (0,) * dim): 1.0 + 0j}
    for i in range(dim):
        ai, bi = za[i], zb[i]
        if ai == 0 and bi == 0:
            continue
        factor: dict[tuple[int, int], complex] = {}
        for j in range(ai + 1):      # z^ai = (x+ip)^ai
            cz = math.comb(ai, j) * (1j) ** (ai - j)
            for k in range(bi + 1):  # zbar^bi = (x-ip)^bi
                cc = math.comb(bi, k) * (-1j) ** (bi - k)
                key = (j + k, (ai - j) + (bi - k))
                factor[key] = factor.get(key, 0j) + cz * cc
        new_partial: dict = {}
        for (xa, xb), c0 in partial.items():
            for (u, v), c1 in factor.items():
                xa2 = list(xa)
                xb2 = list(xb)
                xa2[i] += u
                xb2[i] += v
                key = (tuple(xa2), tuple(xb2))
                new_partial[key] = new_partial.get(key, 0j) + c0 * c1
        partial = new_partial
    return tuple((k, c) for k, c in partial.items() if c != 0)


def random_phase_polynomial(rng: np.random.Generator, dim: int, degree: int,
                            real: bool = True) -> PhasePolynomial:
    """Dense random polynomial of total degree <= degree (testing helper)."""
    terms = {}
    def rec(alpha, beta, pos, budget):
        if pos == 2 * dim:
            c = rng.uniform(-1, 1)
            if not real:
                c = c + 1j * rng.uniform(-1, 1)
            terms[(tuple(alpha), tuple(beta))] = c
            return
        for e in range(budget + 1):
            if pos < dim:
                rec(alpha + [e], beta, pos + 1, budget - e)
            else:
                rec(alpha, beta + [e], pos + 1, budget - e)
    rec([], [], 0, degree)
    return PhasePolynomial(dim, terms)
