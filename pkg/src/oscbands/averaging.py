"""Classical averaging along the harmonic flow.

Provides the flow average V^ave (exact binomial formula for polynomials,
periodic trapezoid rule otherwise), the second-order average V^Delta built
from the double-time Poisson bracket integral, and the Fourier-component
operators of the averaged symbol in two dimensions (B_r on each axis and
their tensor products A_r, with A_0 invertible on even polynomials).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .phasepoly import COEFF_TOL, DimensionMismatchError, PhasePolynomial
from .symbolcalc import flow_pullback
from .timesym import time_poisson_bracket


class ParityError(ValueError):
    pass


def _as_alpha(idx) -> tuple[int, ...]:
    t = tuple(int(i) for i in idx)
    if any(i < 0 for i in t):
        raise ValueError(f"negative exponent {idx!r}")
    return t


class Potential:
    """Real polynomial in x alone (optionally a bare callable for
    evaluation-only use: no closed-form averaging is attempted then)."""

    __slots__ = ("dim", "terms", "func")

    def __init__(self, dim: int, terms: dict | None = None,
                 func: Callable | None = None):
        self.dim = int(dim)
        self.func = func
        clean: dict[tuple[int, ...], float] = {}
        if terms:
            for alpha, c in terms.items():
                alpha = _as_alpha(alpha)
                if len(alpha) != self.dim:
                    raise DimensionMismatchError(f"exponent {alpha} vs dim {self.dim}")
                c = float(c)
                if c != 0.0:
                    clean[alpha] = clean.get(alpha, 0.0) + c
        self.terms = {a: c for a, c in clean.items() if c != 0.0}

    # -- constructors ---------------------------------------------------
    @staticmethod
    def zero(dim: int) -> "Potential":
        return Potential(dim)

    @staticmethod
    def monomial(dim: int, alpha, coeff=1.0) -> "Potential":
        return Potential(dim, {_as_alpha(alpha): coeff})

    @staticmethod
    def from_x_power(power: int, coeff=1.0) -> "Potential":
        return Potential(1, {(power,): coeff})

    @staticmethod
    def separable_even(f1: dict[int, float], f2: dict[int, float]) -> "Potential":
        """V(x1,x2) = f1(x1^2) + f2(x2^2) from coefficient maps {s-power: c}."""
        terms = {}
        for k, c in f1.items():
            terms[(2 * k, 0)] = terms.get((2 * k, 0), 0.0) + c
        for k, c in f2.items():
            terms[(0, 2 * k)] = terms.get((0, 2 * k), 0.0) + c
        return Potential(2, terms)

    # -- structure ------------------------------------------------------
    def is_polynomial(self) -> bool:
        return self.func is None

    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=-1)

    def is_odd(self) -> bool:
        return all(sum(a) % 2 == 1 for a in self.terms)

    def is_even(self) -> bool:
        return all(sum(a) % 2 == 0 for a in self.terms)

    def is_even_each_variable(self) -> bool:
        return all(all(e % 2 == 0 for e in a) for a in self.terms)

    def constant_term(self) -> float:
        return self.terms.get((0,) * self.dim, 0.0)

    def __add__(self, other: "Potential") -> "Potential":
        if self.dim != other.dim:
            raise DimensionMismatchError("potential dims differ")
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0.0) + c
        return Potential(self.dim, terms)

    def __mul__(self, scalar) -> "Potential":
        return Potential(self.dim, {a: c * scalar for a, c in self.terms.items()})

    __rmul__ = __mul__

    def __sub__(self, other: "Potential") -> "Potential":
        return self + (other * -1.0)

    def evaluate(self, xs) -> float:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if self.func is not None:
            return float(self.func(xs))
        total = 0.0
        for a, c in self.terms.items():
            v = c
            for i in range(self.dim):
                if a[i]:
                    v = v * xs[..., i] ** a[i]
            total += v
        return total

    def to_phase_polynomial(self) -> PhasePolynomial:
        if self.func is not None and not self.terms:
            raise ValueError("potential has no polynomial form")
        zero = (0,) * self.dim
        return PhasePolynomial(self.dim, {(a, zero): c for a, c in self.terms.items()})

    def rotated(self, theta: float) -> "Potential":
        """V(O x) for the planar rotation by theta (dim 2 only)."""
        if self.dim != 2:
            raise DimensionMismatchError("rotation is implemented for dim 2")
        c, s = math.cos(theta), math.sin(theta)
        out: dict[tuple[int, int], float] = {}
        for (a1, a2), coeff in self.terms.items():
            # (c x1 + s x2)^a1 * (-s x1 + c x2)^a2
            for i in range(a1 + 1):
                f1 = math.comb(a1, i) * c ** i * s ** (a1 - i)
                for j in range(a2 + 1):
                    f2 = math.comb(a2, j) * (-s) ** j * c ** (a2 - j)
                    key = (i + j, (a1 - i) + (a2 - j))
                    out[key] = out.get(key, 0.0) + coeff * f1 * f2
        return Potential(2, {k: v for k, v in out.items() if abs(v) > 0.0})

    def chop(self, tol: float = COEFF_TOL) -> "Potential":
        return Potential(self.dim, {a: c for a, c in self.terms.items() if abs(c) > tol})

    def isclose(self, other: "Potential", tol: float = COEFF_TOL) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0)) <= tol
                   for k in keys)

    def __repr__(self):
        if not self.terms:
            return f"Potential(dim={self.dim}, 0)"
        bits = []
        for a, c in sorted(self.terms.items()):
            mono = "*".join(f"x{i}^{e}" if e > 1 else f"x{i}"
                            for i, e in enumerate(a) if e)
            bits.append(f"({c:.6g})" + ("*" + mono if mono else ""))
        return " + ".join(bits)

    # -- JSON: {dim, terms: [{alpha, coeff}]} ---------------------------
    def to_json_dict(self) -> dict:
        return {"dim": self.dim,
                "terms": [{"alpha": list(a), "coeff": c}
                          for a, c in sorted(self.terms.items())]}

    @staticmethod
    def from_json_dict(d: dict) -> "Potential":
        terms = {}
        for e in d["terms"]:
            a = _as_alpha(e["alpha"])
            terms[a] = terms.get(a, 0.0) + float(e["coeff"])
        return Potential(int(d["dim"]), terms)


@dataclass
class SemiclassicalPotential:
    """hbar-expansion V_0 + hbar V_1 + hbar^2 V_2 + ... of even potentials."""

    components: list[Potential]

    def __post_init__(self):
        if not self.components:
            raise ValueError("need at least V_0")
        dims = {v.dim for v in self.components}
        if len(dims) != 1:
            raise DimensionMismatchError("components have mixed dims")

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def order(self) -> int:
        return len(self.components) - 1

    def to_json_dict(self) -> dict:
        return {"dim": self.dim,
                "components": [v.to_json_dict() for v in self.components]}

    @staticmethod
    def from_json_dict(d: dict) -> "SemiclassicalPotential":
        return SemiclassicalPotential(
            [Potential.from_json_dict(e) for e in d["components"]])


# ----------------------------------------------------------------------
# flow averages

def average_poly_phase(v: PhasePolynomial) -> PhasePolynomial:
    """Flow average of an x-only PhasePolynomial via the binomial formula.

    A monomial x^alpha averages to zero for odd |alpha|; for even |alpha| it
    becomes 2^{-|alpha|} sum over balanced z/zbar splittings.
    """
    if any(sum(b) for (_, b) in v.terms):
        raise ValueError("average_poly expects a potential in x only")
    dim = v.dim
    zout: dict = {}

    def splittings(alpha, total):
        # vectors j with 0 <= j_r <= alpha_r and sum j = total
        if len(alpha) == 1:
            if 0 <= total <= alpha[0]:
                yield (total,)
            return
        for head in range(min(alpha[0], total) + 1):
            for tail in splittings(alpha[1:], total - head):
                yield (head,) + tail

    for (alpha, _), coeff in v.terms.items():
        n = sum(alpha)
        if n % 2 == 1:
            continue
        base = coeff / (2 ** n)
        for j in splittings(alpha, n // 2):
            w = base
            for r in range(dim):
                w *= math.comb(alpha[r], j[r])
            key = (j, tuple(a - b for a, b in zip(alpha, j)))
            zout[key] = zout.get(key, 0j) + w
    return PhasePolynomial.from_complex_basis(dim, zout)


def average_poly(v: Potential) -> PhasePolynomial:
    """V^ave for a polynomial potential; Poisson-commutes with H0."""
    if not v.is_polynomial():
        raise ValueError("average_poly needs a polynomial potential")
    return average_poly_phase(v.to_phase_polynomial())


def average_numeric(v, point, nodes: int = 64) -> float:
    """Trapezoid-rule circle average of V along the flow through (x, p).

    Exact to roundoff for polynomials of degree < nodes (the periodic
    trapezoid rule integrates trigonometric polynomials exactly).
    """
    if nodes < 16:
        raise ValueError("need at least 16 quadrature nodes")
    x, p = point
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    thetas = 2.0 * math.pi * np.arange(nodes) / nodes
    total = 0.0
    if isinstance(v, Potential):
        eval_fn = v.evaluate
    else:
        eval_fn = v
    for th in thetas:
        val = eval_fn(x * math.cos(th) + p * math.sin(th))
        if not np.isfinite(val):
            raise ArithmeticError(f"potential evaluated to non-finite value at angle {th}")
        total += float(val)
    return total / nodes


def delta_average(v: Potential | PhasePolynomial) -> PhasePolynomial:
    """Second-order average: -(1/4pi) * double flow-bracket integral.

    Computed exactly in the TimeSymbol algebra: inner running integral,
    Poisson bracket against the moving potential, outer running integral,
    evaluated at a full period.
    """
    poly = v.to_phase_polynomial() if isinstance(v, Potential) else v
    moving = flow_pullback(poly)
    inner = moving.integrate_from_zero()
    bracket = time_poisson_bracket(inner, moving)
    outer = bracket.integrate_from_zero()
    result = outer.at_two_pi() * (-1.0 / (4.0 * math.pi))
    return result.chop(0.0)


# ----------------------------------------------------------------------
# Fourier components of the average in two dimensions

def gamma_coeff(k: int, r: int) -> float:
    """Diagonal eigenvalue of B_r on x^{2k}: 4^{-k} C(2k, k+r), zero for |r|>k."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if abs(r) > k:
        return 0.0
    return math.comb(2 * k, k + r) / 4 ** k


def gamma_asymptotic(k: int, r: int) -> float:
    """Leading large-k behavior 1/sqrt(pi*k) of gamma_{k,r}."""
    if k <= 0:
        raise ValueError("asymptotics require k >= 1")
    return 1.0 / math.sqrt(math.pi * k)


def b_r_apply(f: Potential, r: int) -> Potential:
    """Diagonal action x^{2k} -> gamma_{k,r} x^{2k} on even 1-D polynomials."""
    if f.dim != 1:
        raise DimensionMismatchError("b_r_apply acts on 1-D polynomials")
    if not f.is_even_each_variable():
        raise ParityError("b_r_apply needs an even polynomial")
    out = {}
    for (a,), c in f.terms.items():
        g = gamma_coeff(a // 2, r)
        if g != 0.0:
            out[(a,)] = c * g
    return Potential(1, out)


@dataclass
class FourierComponentMap:
    """Components A_r V of the averaged symbol under the auxiliary circle
    action rotating z_1 and z_2 oppositely; stored as polynomials in the
    radial variables (|z_1|, |z_2|) written as (x_1, x_2)."""

    components: dict[int, PhasePolynomial] = field(default_factory=dict)

    def __post_init__(self):
        for r, poly in self.components.items():
            conj = self.components.get(-r)
            if conj is not None and not poly.conjugate_coeffs().isclose(conj, 1e-10):
                raise ValueError("components violate conjugate symmetry")

    def component(self, r: int) -> PhasePolynomial:
        poly = self.components.get(r)
        if poly is None:
            dim = next(iter(self.components.values())).dim if self.components else 2
            return PhasePolynomial.zero(dim)
        return poly

    def radii(self) -> list[int]:
        return sorted(self.components)

    def to_json_dict(self) -> dict:
        return {str(r): p.to_json_dict() for r, p in sorted(self.components.items())}

    @staticmethod
    def from_json_dict(d: dict) -> "FourierComponentMap":
        return FourierComponentMap(
            {int(r): PhasePolynomial.from_json_dict(p) for r, p in d.items()})


def r_n_decompose(v: Potential) -> FourierComponentMap:
    """All components A_r V for a 2-D potential even in each variable.

    Derived from the averaged symbol itself: group its z/zbar monomials by
    their weight under (z1, z2) -> (e^{i t} z1, e^{-i t} z2) (always a
    multiple of 4 for such potentials) and read each group in the radial
    variables.  On separable monomials this reproduces the tensor action
    gamma_{k,r} * gamma_{l,r}.
    """
    if v.dim != 2:
        raise DimensionMismatchError("r_n_decompose is defined for dim 2")
    if not v.is_even_each_variable():
        raise ParityError("r_n_decompose needs a potential even in each variable")
    ave = average_poly(v)
    zmap = ave.to_complex_basis()
    dust = 1e-13 * max((abs(c) for c in zmap.values()), default=1.0)
    comps: dict[int, dict] = {}
    for (a, b), c in zmap.items():
        weight = (a[0] - b[0]) - (a[1] - b[1])
        if weight % 4 != 0:
            if abs(c) <= dust:  # cancellation residue from basis conversions
                continue
            raise ArithmeticError(f"unexpected weight {weight} in averaged symbol")
        r = weight // 4
        key = ((a[0] + b[0], a[1] + b[1]), (0, 0))
        comps.setdefault(r, {})
        comps[r][key] = comps[r].get(key, 0j) + c
    out = {}
    for r, terms in comps.items():
        poly = PhasePolynomial(2, terms)
        if not poly.is_zero():
            out[r] = poly
    return FourierComponentMap(out)


def a0_invert(g: PhasePolynomial) -> PhasePolynomial:
    """Inverse of the r = 0 component map on even 2-D polynomials: divide the
    x1^{2k} x2^{2l} coefficient by gamma_{k,0} gamma_{l,0} (always positive)."""
    if g.dim != 2:
        raise DimensionMismatchError("a0_invert is defined for dim 2")
    out = {}
    for (a, b), c in g.terms.items():
        if sum(b) != 0:
            raise ValueError("a0_invert expects a polynomial in x only")
        if a[0] % 2 or a[1] % 2:
            raise ParityError("a0_invert needs even exponents")
        out[(a, b)] = c / (gamma_coeff(a[0] // 2, 0) * gamma_coeff(a[1] // 2, 0))
    return PhasePolynomial(2, out)
