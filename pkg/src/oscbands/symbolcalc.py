"""Exact phase-space symbol calculus for the harmonic flow.

Conventions, fixed once and anchored by the exactly solvable linear
perturbation (see the convention audit in the test suite):

* Poisson bracket {f,g} = sum_i df/dx_i dg/dp_i - df/dp_i dg/dx_i.
* Hamilton flow of H0 = (|x|^2+|p|^2)/2 runs forward: xdot = p, pdot = -x,
  i.e. phi_s(x,p) = (x cos s + p sin s, p cos s - x sin s); in z = x + ip
  this is z -> e^{-is} z.
* Moyal grading a # b = sum_j hbar^j B_j(a,b) with B_j = (1/2i)^j {.,.}_j,
  oriented so that x # p - p # x quantizes to the commutator i*hbar.

With these choices the transport equations read
    rdot_k = -{H0, r_k} - i sum_{l=0}^{k-1} B_l(r_{k-1-l}, V),  r_k(0) = 0,
solved exactly by the Duhamel integral r_k(t) = -i int_0^t g_k(t-s) o phi_s ds
inside the (t-power, frequency) graded algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .phasepoly import COEFF_TOL, DimensionMismatchError, ExpPolySymbol, PhasePolynomial
from .timesym import TimeSymbol, time_poisson_bracket


class ConventionError(AssertionError):
    """A built-in contract of the transport pipeline failed."""


# ----------------------------------------------------------------------
# brackets

def poisson_bracket(f: PhasePolynomial, g: PhasePolynomial) -> PhasePolynomial:
    if f.dim != g.dim:
        raise DimensionMismatchError(f"dim {f.dim} != {g.dim}")
    acc = PhasePolynomial.zero(f.dim)
    for i in range(f.dim):
        acc = acc + f.diff_x(i) * g.diff_p(i) - f.diff_p(i) * g.diff_x(i)
    return acc


def _multi_indices(dim: int, total: int):
    """All multi-indices over `dim` slots summing to `total`."""
    if dim == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _multi_indices(dim - 1, total - head):
            yield (head,) + tail


def _apply_derivs(obj, xs: tuple[int, ...], ps: tuple[int, ...]):
    for i, e in enumerate(xs):
        for _ in range(e):
            obj = obj.diff_x(i)
    for i, e in enumerate(ps):
        for _ in range(e):
            obj = obj.diff_p(i)
    return obj


def _fact(idx: tuple[int, ...]) -> int:
    out = 1
    for e in idx:
        out *= math.factorial(e)
    return out


def higher_bracket(a, b, k: int):
    """{a,b}_k = sum_{|alpha|+|beta|=k} (-1)^|alpha|/(alpha! beta!)
    d_p^beta d_x^alpha a * d_p^alpha d_x^beta b.

    k = 0 is the plain product; k = 1 is minus the Poisson bracket in the
    conventions of this module.  Accepts PhasePolynomial / ExpPolySymbol /
    ExpTimePoly operands (anything with diff_x/diff_p and products).
    """
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dim {a.dim} != {b.dim}")
    if k < 0:
        raise ValueError("bracket order must be nonnegative")
    dim = a.dim
    acc = None
    for na in range(k + 1):
        nb = k - na
        for alpha in _multi_indices(dim, na):
            da_cache = _apply_derivs(a, alpha, (0,) * dim)
            for beta in _multi_indices(dim, nb):
                da = _apply_derivs(da_cache, (0,) * dim, beta)
                db = _apply_derivs(_apply_derivs(b, beta, (0,) * dim),
                                   (0,) * dim, alpha)
                coeff = ((-1) ** na) / (_fact(alpha) * _fact(beta))
                term = (da * db) * coeff
                acc = term if acc is None else acc + term
    if acc is None:
        acc = PhasePolynomial.zero(dim)
    return acc


def moyal_term(a, b, j: int):
    """B_j(a, b), the hbar^j coefficient of the Moyal product.

    B_0(a,b) = a*b and B_1(a,b) = (i/2){a,b}; the orientation makes
    x # p - p # x = i*hbar at the operator level.  At most one argument may
    be exponential-type unless both share the same rate.
    """
    a_exp = isinstance(a, ExpPolySymbol)
    b_exp = isinstance(b, ExpPolySymbol)
    if a_exp and b_exp and a.rate != b.rate:
        raise ValueError("Moyal term of two exponential symbols with "
                         "different rates is unsupported")
    return higher_bracket(a, b, j) * ((-0.5j) ** j)


# ----------------------------------------------------------------------
# harmonic flow

@lru_cache(maxsize=200000)
def _monomial_pullback(dim: int, alpha: tuple, beta: tuple) -> tuple:
    """Frequency decomposition of (x^alpha p^beta) o phi_s, cached.

    Returns ((m, terms-dict), ...) with each terms-dict a PhasePolynomial
    coefficient map.
    """
    mono = PhasePolynomial.monomial(dim, alpha, beta)
    zmap = mono.to_complex_basis()
    by_freq: dict[int, dict] = {}
    for (a, b), c in zmap.items():
        m = sum(b) - sum(a)
        by_freq.setdefault(m, {})[(a, b)] = c
    out = []
    for m, sub in by_freq.items():
        poly = PhasePolynomial.from_complex_basis(dim, sub)
        if not poly.is_zero():
            out.append((m, tuple(poly.terms.items())))
    return tuple(out)


def flow_pullback(f: PhasePolynomial) -> TimeSymbol:
    """f o phi_s as a TimeSymbol in s (2*pi periodic; value at s=0 is f).

    In complex coordinates the forward flow is z -> e^{-is} z, so a monomial
    z^a zbar^b picks up the frequency |b| - |a|.  Assembled monomial by
    monomial from a cache (the flow acts diagonally on the z-basis).
    """
    freq_terms: dict[int, dict] = {}
    for (alpha, beta), coeff in f.terms.items():
        for m, items in _monomial_pullback(f.dim, alpha, beta):
            tgt = freq_terms.setdefault(m, {})
            for key, c in items:
                s = tgt.get(key, 0j) + coeff * c
                if s == 0:
                    tgt.pop(key, None)
                else:
                    tgt[key] = s
    out = TimeSymbol(f.dim)
    for m, terms in freq_terms.items():
        poly = PhasePolynomial(f.dim)
        poly.terms = {k: c for k, c in terms.items() if c != 0}
        if not poly.is_zero():
            out.terms[(0, m)] = poly
    return out


def flow_pullback_at(f: PhasePolynomial, s: float) -> PhasePolynomial:
    return flow_pullback(f).evaluate(s)


def time_moyal_with_poly(ts: TimeSymbol, v: PhasePolynomial, l: int) -> TimeSymbol:
    """B_l(ts, v) termwise over the (q, m) grading, v constant in time."""
    out = TimeSymbol(ts.dim)
    for (q, m), p in ts.terms.items():
        term = moyal_term(p, v, l)
        if not term.is_zero():
            out._accumulate(q, m, term)
    return out


def duhamel(g: TimeSymbol) -> TimeSymbol:
    """int_0^t g(t-s) o phi_s ds, exactly, inside the TimeSymbol algebra.

    This propagates the source along the harmonic flow; it solves
    ydot = -{H0, y} + g(t) with y(0) = 0.  Internally the integral is taken
    in complex coordinates where the flow acts diagonally on monomials
    (z^a zbar^b just oscillates at frequency |b|-|a|), so only one basis
    conversion per term is needed.
    """
    out_z: dict[tuple[int, int], dict] = {}

    def add(q: int, m: int, key, c: complex):
        tgt = out_z.setdefault((q, m), {})
        s = tgt.get(key, 0j) + c
        if s == 0:
            tgt.pop(key, None)
        else:
            tgt[key] = s

    for (q, m), p in g.terms.items():
        fact_q = math.factorial(q)
        for (a_exp, b_exp), c in p.to_complex_basis().items():
            mp = sum(b_exp) - sum(a_exp)
            k = mp - m
            key = (a_exp, b_exp)
            if k == 0:
                add(q + 1, m, key, c / (q + 1))
                continue
            aa = -1j * k
            for r in range(q + 1):
                coeff = ((-1) ** r) * fact_q / (math.factorial(q - r) * aa ** (r + 1))
                add(q - r, m, key, c * coeff)
            add(0, m + k, key, c * ((-1) ** (q + 1)) * fact_q / aa ** (q + 1))

    out = TimeSymbol(g.dim)
    for (q, m), zterms in out_z.items():
        poly = PhasePolynomial.from_complex_basis(g.dim, zterms)
        if not poly.is_zero():
            out._accumulate(q, m, poly)
    return out


# ----------------------------------------------------------------------
# hbar-graded Moyal series

def star_series(f: list[PhasePolynomial], g: list[PhasePolynomial],
                order: int) -> list[PhasePolynomial]:
    """Moyal product of two hbar-series, truncated at hbar^order."""
    dim = f[0].dim
    out = [PhasePolynomial.zero(dim) for _ in range(order + 1)]
    for a, fa in enumerate(f):
        if a > order:
            break
        for b, gb in enumerate(g):
            if a + b > order:
                break
            for l in range(order - a - b + 1):
                if fa.is_zero() or gb.is_zero():
                    continue
                out[a + b + l] = out[a + b + l] + moyal_term(fa, gb, l)
    return out


def star_power_series(f: list[PhasePolynomial], k: int,
                      order: int) -> list[PhasePolynomial]:
    dim = f[0].dim
    out = [PhasePolynomial.constant(dim, 1.0)] + \
          [PhasePolynomial.zero(dim) for _ in range(order)]
    for _ in range(k):
        out = star_series(out, f, order)
    return out


# ----------------------------------------------------------------------
# transport recursion

@dataclass
class TransportResult:
    """r_k(t) symbols and the hbar-graded symbol w of the band-shift operator."""
    r: list[TimeSymbol]
    w: list[PhasePolynomial]

    @property
    def order(self) -> int:
        return len(self.w) - 1


MAX_TRANSPORT_ORDER = 8


def transport_symbols(v: PhasePolynomial, order: int = 4,
                      validate: bool = True) -> TransportResult:
    """Solve the transport recursion for a polynomial potential.

    Returns r_0..r_order (TimeSymbols) and w_0..w_order (PhasePolynomials),
    where w is assembled from the alternating logarithm series of the
    monodromy symbol r(2*pi) under the truncated Moyal product.

    Built-in contracts (checked when ``validate``): w_0 equals the flow
    average of v and w_1 vanishes.
    """
    if not isinstance(v, PhasePolynomial):
        raise TypeError("potential must be given as a PhasePolynomial")
    if any(sum(b) for (_, b) in v.terms):
        raise ValueError("potential must depend on x only")
    if order > MAX_TRANSPORT_ORDER:
        raise ValueError(f"transport order {order} exceeds bound {MAX_TRANSPORT_ORDER}")
    dim = v.dim

    rs: list[TimeSymbol] = []
    r0 = flow_pullback(v).integrate_from_zero() * (-1j)
    rs.append(r0)
    for k in range(1, order + 1):
        g = TimeSymbol.zero(dim)
        for l in range(k):
            g = g + time_moyal_with_poly(rs[k - 1 - l], v, l)
        rs.append(duhamel(g) * (-1j))

    monodromy = [r.at_two_pi() for r in rs]

    w = [PhasePolynomial.zero(dim) for _ in range(order + 1)]
    power = [PhasePolynomial.constant(dim, 1.0)] + \
            [PhasePolynomial.zero(dim) for _ in range(order)]
    for j in range(1, order + 2):
        power = star_series(power, monodromy, order)
        sign = (1.0 if j % 2 == 1 else -1.0) / j
        # hbar^(j-1) prefactor shifts the series index
        for c in range(order + 1):
            if c - (j - 1) >= 0:
                w[c] = w[c] + power[c - (j - 1)] * sign
    w = [(0.5j / math.pi) * wk for wk in w]
    w = [wk.chop(0.0) for wk in w]

    if validate:
        from .averaging import average_poly_phase
        scale = max(1.0, v.max_abs_coeff()) ** (order + 1)
        if not w[0].isclose(average_poly_phase(v), COEFF_TOL * scale):
            raise ConventionError("w_0 does not match the flow average")
        if order >= 1 and not w[1].is_zero(COEFF_TOL * scale):
            raise ConventionError("w_1 is not zero")
    return TransportResult(r=rs, w=w)


def moyal_power_expansion(w0: PhasePolynomial, w2: PhasePolynomial,
                          l: int) -> tuple[PhasePolynomial, PhasePolynomial]:
    """Order-0 and order-hbar^2 parts of the Moyal power (w0 + h^2 w2)^{#(l+1)}.

    The hbar^2 part is (l+1) w0^l w2 + sum_{j=0}^{l-1} w0^j B_2(w0, w0^{l-j}).
    """
    if w0.dim != w2.dim:
        raise DimensionMismatchError(f"dim {w0.dim} != {w2.dim}")
    lead = w0 ** (l + 1)
    corr = (w0 ** l) * w2 * (l + 1)
    for j in range(l):
        corr = corr + (w0 ** j) * moyal_term(w0, w0 ** (l - j), 2)
    return lead, corr


def bracket_weighted_sum(w0: PhasePolynomial, l: int) -> PhasePolynomial:
    """sum_{j=0}^{l-1} w0^j B_2(w0, w0^{l-j})  (the correction entering the
    second band invariant)."""
    acc = PhasePolynomial.zero(w0.dim)
    for j in range(l):
        acc = acc + (w0 ** j) * moyal_term(w0, w0 ** (l - j), 2)
    return acc
