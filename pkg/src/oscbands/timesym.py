"""Time-dependent phase-space symbols.

Two graded families:

* :class:`TimeSymbol` -- sums of t^q * exp(i*m*t) * P(x,p) over integer
  t-powers q >= 0 and integer frequencies m.  Closed under products,
  Poisson brackets, d/dt, the running integral from 0, and the Duhamel
  integral along the harmonic flow.  Integration of resonant (m = 0) terms
  produces secular t*P terms, which is exactly why the (q, m) bigrading is
  carried.

* :class:`ExpTimePoly` -- sums of t^q * P_q(x,p) * exp(i*t*H0), the algebra
  generated by the free propagator symbol; closed under x/p derivatives
  (each derivative of the exponential lowers a factor i*t*x_i or i*t*p_i)
  and d/dt.
"""

from __future__ import annotations

import math

import numpy as np

from .phasepoly import COEFF_TOL, PhasePolynomial

TWO_PI = 2.0 * math.pi


class TimeSymbol:
    """Map (q, m) -> PhasePolynomial, meaning sum of t^q e^{imt} P_{q,m}."""

    __slots__ = ("dim", "terms")

    def __init__(self, dim: int, terms: dict | None = None):
        self.dim = int(dim)
        self.terms: dict[tuple[int, int], PhasePolynomial] = {}
        if terms:
            for (q, m), poly in terms.items():
                if poly.is_zero():
                    continue
                self._accumulate(int(q), int(m), poly)

    def _accumulate(self, q: int, m: int, poly: PhasePolynomial):
        if q < 0:
            raise ValueError("negative t-power")
        key = (q, m)
        if key in self.terms:
            s = self.terms[key] + poly
            if s.is_zero():
                del self.terms[key]
            else:
                self.terms[key] = s
        elif not poly.is_zero():
            self.terms[key] = poly

    @staticmethod
    def zero(dim: int) -> "TimeSymbol":
        return TimeSymbol(dim)

    @staticmethod
    def from_poly(poly: PhasePolynomial) -> "TimeSymbol":
        return TimeSymbol(poly.dim, {(0, 0): poly})

    # ------------------------------------------------------------------
    def __add__(self, other: "TimeSymbol") -> "TimeSymbol":
        if not isinstance(other, TimeSymbol):
            return NotImplemented
        out = TimeSymbol(self.dim)
        out.terms = dict(self.terms)
        for (q, m), poly in other.terms.items():
            out._accumulate(q, m, poly)
        return out

    def __neg__(self):
        out = TimeSymbol(self.dim)
        out.terms = {k: -p for k, p in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            out = TimeSymbol(self.dim)
            if other != 0:
                out.terms = {k: p * other for k, p in self.terms.items()}
            return out
        if isinstance(other, PhasePolynomial):
            out = TimeSymbol(self.dim)
            for k, p in self.terms.items():
                prod = p * other
                if not prod.is_zero():
                    out.terms[k] = prod
            return out
        if isinstance(other, TimeSymbol):
            out = TimeSymbol(self.dim)
            for (q1, m1), p1 in self.terms.items():
                for (q2, m2), p2 in other.terms.items():
                    out._accumulate(q1 + q2, m1 + m2, p1 * p2)
            return out
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "TimeSymbol":
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = TimeSymbol.from_poly(PhasePolynomial.constant(self.dim, 1.0))
        for _ in range(k):
            out = out * self
        return out

    # ------------------------------------------------------------------
    def map_polys(self, fn) -> "TimeSymbol":
        out = TimeSymbol(self.dim)
        for k, p in self.terms.items():
            q = fn(p)
            if not q.is_zero():
                out.terms[k] = q
        return out

    def dt(self) -> "TimeSymbol":
        """d/dt, termwise: q t^{q-1} + i m t^q."""
        out = TimeSymbol(self.dim)
        for (q, m), p in self.terms.items():
            if q > 0:
                out._accumulate(q - 1, m, p * q)
            if m != 0:
                out._accumulate(q, m, p * (1j * m))
        return out

    def integrate_from_zero(self) -> "TimeSymbol":
        """Running integral int_0^t, exact in the (q, m) algebra.

        For m != 0: int_0^t s^q e^{ims} ds =
            q! sum_{r=0..q} (-1)^r t^{q-r} e^{imt} / ((q-r)! (im)^{r+1})
            + (-1)^{q+1} q! / (im)^{q+1}.
        """
        out = TimeSymbol(self.dim)
        for (q, m), p in self.terms.items():
            if m == 0:
                out._accumulate(q + 1, 0, p * (1.0 / (q + 1)))
                continue
            a = 1j * m
            fact_q = math.factorial(q)
            for r in range(q + 1):
                coeff = ((-1) ** r) * fact_q / (math.factorial(q - r) * a ** (r + 1))
                out._accumulate(q - r, m, p * coeff)
            const = ((-1) ** (q + 1)) * fact_q / a ** (q + 1)
            out._accumulate(0, 0, p * const)
        return out

    def evaluate(self, t: float) -> PhasePolynomial:
        acc = PhasePolynomial.zero(self.dim)
        for (q, m), p in self.terms.items():
            acc = acc + p * ((t ** q) * np.exp(1j * m * t))
        return acc

    def at_zero(self) -> PhasePolynomial:
        """Value at t = 0 (sum over q = 0 of all frequencies)."""
        acc = PhasePolynomial.zero(self.dim)
        for (q, m), p in self.terms.items():
            if q == 0:
                acc = acc + p
        return acc

    def at_two_pi(self) -> PhasePolynomial:
        """Value at t = 2*pi, using e^{2*pi*i*m} = 1 exactly."""
        acc = PhasePolynomial.zero(self.dim)
        for (q, m), p in self.terms.items():
            acc = acc + p * (TWO_PI ** q)
        return acc

    def max_abs_coeff(self) -> float:
        return max((p.max_abs_coeff() for p in self.terms.values()), default=0.0)

    def chop(self, tol: float = COEFF_TOL) -> "TimeSymbol":
        out = TimeSymbol(self.dim)
        for k, p in self.terms.items():
            q = p.chop(tol)
            if not q.is_zero():
                out.terms[k] = q
        return out

    def isclose(self, other: "TimeSymbol", tol: float = COEFF_TOL) -> bool:
        keys = set(self.terms) | set(other.terms)
        zero = PhasePolynomial.zero(self.dim)
        return all(self.terms.get(k, zero).isclose(other.terms.get(k, zero), tol)
                   for k in keys)

    def __repr__(self):
        if not self.terms:
            return "TimeSymbol(0)"
        bits = [f"t^{q}*e^{{{m}it}}*[{p!r}]" for (q, m), p in sorted(self.terms.items())]
        return " + ".join(bits)


def time_poisson_bracket(f: TimeSymbol, g: TimeSymbol) -> TimeSymbol:
    """Poisson bracket in (x, p), bilinear over the (q, m) grading."""
    out = TimeSymbol(f.dim)
    for (q1, m1), p1 in f.terms.items():
        for (q2, m2), p2 in g.terms.items():
            acc = PhasePolynomial.zero(f.dim)
            for i in range(f.dim):
                acc = acc + p1.diff_x(i) * p2.diff_p(i) - p1.diff_p(i) * p2.diff_x(i)
            if not acc.is_zero():
                out._accumulate(q1 + q2, m1 + m2, acc)
    return out


class ExpTimePoly:
    """(sum_q t^q P_q(x,p)) * exp(i*t*H0), with symbolic t."""

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: dict | None = None):
        self.dim = int(dim)
        self.coeffs: dict[int, PhasePolynomial] = {}
        if coeffs:
            for q, p in coeffs.items():
                if not p.is_zero():
                    self._accumulate(int(q), p)

    def _accumulate(self, q: int, poly: PhasePolynomial):
        if q in self.coeffs:
            s = self.coeffs[q] + poly
            if s.is_zero():
                del self.coeffs[q]
            else:
                self.coeffs[q] = s
        elif not poly.is_zero():
            self.coeffs[q] = poly

    @staticmethod
    def propagator(dim: int) -> "ExpTimePoly":
        """The bare exp(i*t*H0)."""
        return ExpTimePoly(dim, {0: PhasePolynomial.constant(dim, 1.0)})

    def __add__(self, other: "ExpTimePoly") -> "ExpTimePoly":
        out = ExpTimePoly(self.dim)
        out.coeffs = dict(self.coeffs)
        for q, p in other.coeffs.items():
            out._accumulate(q, p)
        return out

    def __neg__(self):
        out = ExpTimePoly(self.dim)
        out.coeffs = {q: -p for q, p in self.coeffs.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            out = ExpTimePoly(self.dim)
            if other != 0:
                out.coeffs = {q: p * other for q, p in self.coeffs.items()}
            return out
        if isinstance(other, PhasePolynomial):
            out = ExpTimePoly(self.dim)
            for q, p in self.coeffs.items():
                prod = p * other
                if not prod.is_zero():
                    out.coeffs[q] = prod
            return out
        return NotImplemented

    __rmul__ = __mul__

    def mul_t_power(self, k: int) -> "ExpTimePoly":
        out = ExpTimePoly(self.dim)
        out.coeffs = {q + k: p for q, p in self.coeffs.items()}
        return out

    def dt(self) -> "ExpTimePoly":
        """d/dt: q t^{q-1} P_q + i H0 t^q P_q (times the exponential)."""
        h0 = PhasePolynomial.oscillator_energy(self.dim)
        out = ExpTimePoly(self.dim)
        for q, p in self.coeffs.items():
            if q > 0:
                out._accumulate(q - 1, p * q)
            out._accumulate(q, h0 * p * 1j)
        return out

    def diff_x(self, i: int) -> "ExpTimePoly":
        xi = PhasePolynomial.x(i, self.dim)
        out = ExpTimePoly(self.dim)
        for q, p in self.coeffs.items():
            d = p.diff_x(i)
            if not d.is_zero():
                out._accumulate(q, d)
            out._accumulate(q + 1, xi * p * 1j)
        return out

    def diff_p(self, i: int) -> "ExpTimePoly":
        pi = PhasePolynomial.p(i, self.dim)
        out = ExpTimePoly(self.dim)
        for q, p in self.coeffs.items():
            d = p.diff_p(i)
            if not d.is_zero():
                out._accumulate(q, d)
            out._accumulate(q + 1, pi * p * 1j)
        return out

    def max_abs_coeff(self) -> float:
        return max((p.max_abs_coeff() for p in self.coeffs.values()), default=0.0)

    def isclose(self, other: "ExpTimePoly", tol: float = COEFF_TOL) -> bool:
        keys = set(self.coeffs) | set(other.coeffs)
        zero = PhasePolynomial.zero(self.dim)
        return all(self.coeffs.get(k, zero).isclose(other.coeffs.get(k, zero), tol)
                   for k in keys)

    def __repr__(self):
        bits = [f"t^{q}*[{p!r}]" for q, p in sorted(self.coeffs.items())]
        return "(" + (" + ".join(bits) if bits else "0") + ")*e^{itH0}"
