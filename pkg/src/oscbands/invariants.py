"""Band invariants: classical phase-space integrals and quantum trace moments.

The classical side evaluates the invariants exactly for polynomial data with
Gaussian weights (per-coordinate moment calculus); compact-bump weights fall
back to radial quadrature.  The quantum side turns detected cluster shifts
into normalized trace moments whose hbar-expansion coefficients reproduce the
classical integrals; the (2*pi*hbar)^n prefactor and the evaluation of the
weight at the unsubtracted ladder hbar*(j+n/2) are the normalization choices
that make the leading coefficient the classical integral and kill the
first-order term (validated against exactly solvable potentials).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .averaging import Potential, SemiclassicalPotential, average_poly, delta_average
from .oscillator import (ClusterSet, TrustWindowError, basis_for_energy,
                         compute_spectrum, detect_clusters, spectrum_1d,
                         split_separable)
from .phasepoly import DimensionMismatchError, ExpPolySymbol, PhasePolynomial
from .symbolcalc import bracket_weighted_sum, moyal_term, time_poisson_bracket
from .timesym import TimeSymbol


class IllConditionedError(ArithmeticError):
    pass


class QuadratureError(ArithmeticError):
    pass


# ----------------------------------------------------------------------
# weights

@dataclass(frozen=True)
class WeightSpec:
    """Weight f applied to the oscillator energy: gaussian e^{-mu*s} or a
    smooth compact bump around `center` of half-width `radius`."""

    kind: str
    mu: float = 0.0
    center: float = 0.0
    radius: float = 0.0

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.mu <= 0:
                raise ValueError("gaussian weight needs mu > 0")
        elif self.kind == "bump":
            if self.radius <= 0:
                raise ValueError("bump weight needs a positive radius")
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    @staticmethod
    def gaussian(mu: float) -> "WeightSpec":
        return WeightSpec(kind="gaussian", mu=mu)

    @staticmethod
    def bump(center: float, radius: float) -> "WeightSpec":
        return WeightSpec(kind="bump", center=center, radius=radius)

    def __call__(self, s):
        if self.kind == "gaussian":
            return np.exp(-self.mu * np.asarray(s, dtype=float))
        t = (np.asarray(s, dtype=float) - self.center) / self.radius
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        return out


def _phi_as_poly_coeffs(phi) -> list[float] | None:
    """Monomial power (int) or coefficient list -> coefficients, else None."""
    if isinstance(phi, int):
        return [0.0] * phi + [1.0]
    if isinstance(phi, (list, tuple)):
        return [float(c) for c in phi]
    return None


def _phi_callable(phi) -> Callable:
    coeffs = _phi_as_poly_coeffs(phi)
    if coeffs is None:
        return phi
    def f(s):
        s = np.asarray(s, dtype=float)
        acc = np.zeros_like(s)
        for c in reversed(coeffs):
            acc = acc * s + c
        return acc
    return f


def _phi_of_poly(phi, poly: PhasePolynomial) -> PhasePolynomial:
    coeffs = _phi_as_poly_coeffs(phi)
    if coeffs is None:
        raise ValueError("closed-form path needs a polynomial phi")
    acc = PhasePolynomial.zero(poly.dim)
    power = PhasePolynomial.constant(poly.dim, 1.0)
    for c in coeffs:
        if c:
            acc = acc + power * c
        power = power * poly
    return acc


# ----------------------------------------------------------------------
# exact Gaussian moments

def _gauss_moment_table(max_even: int, mu: float) -> list[float]:
    """int e^{-mu u^2} u^{2a} du = sqrt(pi) (2a)!/(4^a a!) mu^{-a-1/2}."""
    out = []
    for a in range(max_even // 2 + 1):
        out.append(math.sqrt(math.pi) * math.factorial(2 * a)
                   / (4 ** a * math.factorial(a)) * mu ** (-(a + 0.5)))
    return out


def gaussian_phase_integral(poly: PhasePolynomial, mu: float) -> complex:
    """Exact integral of e^{-mu*|z|^2} * poly over phase space (dx dp)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    deg = max(poly.degree(), 0)
    table = _gauss_moment_table(deg, mu)
    total = 0j
    for (alpha, beta), c in poly.terms.items():
        if any(e % 2 for e in alpha) or any(e % 2 for e in beta):
            continue
        v = complex(c)
        for e in alpha:
            v *= table[e // 2]
        for e in beta:
            v *= table[e // 2]
        total += v
    return total


def gaussian_energy_integral(poly: PhasePolynomial, mu: float) -> complex:
    """Exact integral of e^{-mu*H0} * poly (H0 = |z|^2/2)."""
    return gaussian_phase_integral(poly, mu / 2.0)


# ----------------------------------------------------------------------
# sphere averages

def sphere_average_poly(poly: PhasePolynomial, energy: float) -> float:
    """Average of a phase polynomial over {H0 = energy} with the normalized
    round measure; exact via balanced z/zbar monomial moments."""
    if energy <= 0:
        raise ValueError("energy must be positive")
    rsq = 2.0 * energy
    zmap = poly.to_complex_basis()
    total = 0j
    if poly.dim == 1:
        for (a, b), c in zmap.items():
            if a == b:
                total += c * rsq ** a[0]
    elif poly.dim == 2:
        for (a, b), c in zmap.items():
            if a == b:
                k, l = a
                total += c * rsq ** (k + l) * (math.factorial(k) * math.factorial(l)
                                               / math.factorial(k + l + 1))
    else:
        raise DimensionMismatchError("sphere averages implemented for dim 1 and 2")
    if abs(total.imag) > 1e-9 * max(1.0, abs(total)):
        raise ArithmeticError("sphere average came out non-real")
    return float(total.real)


def _sphere_quadrature(poly_ave: PhasePolynomial, energy: float, phi: Callable,
                       nodes: int) -> float:
    """Numeric average of phi(averaged symbol) over the energy sphere."""
    r = math.sqrt(2.0 * energy)
    if poly_ave.dim == 1:
        val = poly_ave.evaluate([r], [0.0]).real
        return float(phi(val))
    # fibers over the action segment: z1 = r sqrt(1-u) e^{i th}, z2 = r sqrt(u)
    u_nodes, u_weights = np.polynomial.legendre.leggauss(nodes)
    u_nodes = 0.5 * (u_nodes + 1.0)
    u_weights = 0.5 * u_weights
    thetas = 2.0 * math.pi * np.arange(nodes) / nodes
    total = 0.0
    for u, w in zip(u_nodes, u_weights):
        r1 = r * math.sqrt(1.0 - u)
        r2 = r * math.sqrt(u)
        vals = [poly_ave.evaluate([r1 * math.cos(t), r2], [r1 * math.sin(t), 0.0]).real
                for t in thetas]
        total += w * float(np.mean(phi(np.array(vals))))
    return total


def sphere_invariant(v: Potential, energy: float, phi, quad_nodes: int = 48) -> float:
    """Average of phi(V^ave) over the sphere H0 = energy (mass-one measure).

    Exact for polynomial phi; otherwise quadrature with a doubling
    convergence check.
    """
    ave = average_poly(v)
    coeffs = _phi_as_poly_coeffs(phi)
    if coeffs is not None:
        return sphere_average_poly(_phi_of_poly(phi, ave), energy)
    f = _phi_callable(phi)
    coarse = _sphere_quadrature(ave, energy, f, quad_nodes)
    fine = _sphere_quadrature(ave, energy, f, 2 * quad_nodes)
    if abs(fine - coarse) > 1e-10 * max(1.0, abs(fine)) + 1e-12:
        raise QuadratureError(f"sphere quadrature not converged: {coarse} vs {fine}")
    return fine


def _volume_density(n: int, energy: float) -> float:
    # d/dE vol{H0 <= E} = (2 pi)^n E^{n-1} / (n-1)!
    return (2.0 * math.pi) ** n * energy ** (n - 1) / math.factorial(n - 1)


def _radial_integral(v: Potential, weight: WeightSpec, phi, nodes: int = 160) -> float:
    if weight.kind == "bump":
        lo = max(weight.center - weight.radius, 1e-12)
        hi = weight.center + weight.radius
    else:
        lo, hi = 1e-12, 45.0 / weight.mu
    def quad(m):
        xs, ws = np.polynomial.legendre.leggauss(m)
        xs = 0.5 * (xs + 1.0) * (hi - lo) + lo
        ws = 0.5 * ws * (hi - lo)
        total = 0.0
        for e, w in zip(xs, ws):
            avg = sphere_invariant(v, e, phi)
            total += w * float(weight(e)) * avg * _volume_density(v.dim, e)
        return total
    coarse, fine = quad(nodes), quad(2 * nodes)
    if abs(fine - coarse) > 1e-9 * max(1.0, abs(fine)):
        raise QuadratureError("radial quadrature not converged")
    return fine


def band_invariant_first(v: Potential, weight: WeightSpec, phi) -> float:
    """First band invariant: integral of f(H0) phi(V^ave) over phase space."""
    coeffs = _phi_as_poly_coeffs(phi)
    if weight.kind == "gaussian" and coeffs is not None:
        value = gaussian_energy_integral(_phi_of_poly(phi, average_poly(v)), weight.mu)
        return float(value.real)
    return _radial_integral(v, weight, phi)


def second_invariant(v: Potential, weight: WeightSpec, l: int = 0) -> float:
    """The hbar^2 trace coefficient at phi(s) = s^{l+1}: the V^Delta term plus
    all correction terms (Moyal term against the weight, the bracket-weighted
    power sum, and the symbol correction of f applied to the dressed operator).

    The dressed-operator symbol correction enters with V - V^ave; with
    gaussian weights every piece reduces to closed-form moments.
    """
    if weight.kind != "gaussian":
        raise ValueError("second_invariant needs a gaussian weight (closed-form derivatives)")
    if l < 0:
        raise ValueError("l must be nonnegative")
    mu = weight.mu
    n = v.dim
    w0 = average_poly(v)
    w2 = delta_average(v)
    h0 = PhasePolynomial.oscillator_energy(n)
    vp = v.to_phase_polynomial()

    main = (l + 1) * gaussian_energy_integral((w0 ** l) * w2, mu)
    fexp = ExpPolySymbol.pure(n, -mu)
    b2 = moyal_term(fexp, w0 ** (l + 1), 2)
    corr_b2 = gaussian_energy_integral(b2.prefactor, mu)
    corr_pow = gaussian_energy_integral(bracket_weighted_sum(w0, l), mu)
    # f'(H0)(V - V^ave) - (n/8 f'' + H0/12 f''')(H0), against w0^{l+1}
    inner = (vp - w0) * (-mu) + PhasePolynomial.constant(n, -(n / 8.0) * mu ** 2) \
        + h0 * (mu ** 3 / 12.0)
    corr_sym = gaussian_energy_integral((w0 ** (l + 1)) * inner, mu)
    total = main + corr_b2 + corr_pow + corr_sym
    return float(total.real)


def odd_invariant(v: Potential, weight: WeightSpec, phi) -> float:
    """Leading invariant for odd potentials: integral of f(H0) phi(V^Delta)."""
    if not v.is_odd():
        raise ValueError("odd_invariant needs an odd potential")
    coeffs = _phi_as_poly_coeffs(phi)
    vdelta = delta_average(v)
    if weight.kind == "gaussian" and coeffs is not None:
        return float(gaussian_energy_integral(_phi_of_poly(phi, vdelta), weight.mu).real)
    # radial route on phi(V^Delta): reuse the sphere machinery termwise
    raise NotImplementedError("odd_invariant is closed-form only (gaussian weight, polynomial phi)")


def odd_kernel_integral(k: int, l: int, mu: float) -> float:
    """Gaussian-weighted double flow-bracket pairing of the odd monomial
    generators (e^{is} z + e^{-is} zbar)^k against the l-th power, dim 1.

    Evaluated exactly in the TimeSymbol algebra.  The complex-coordinate
    bracket Im(d_z f d_zbar g) equals one quarter of the (x,p) bracket on
    real symbols, hence the 1/4.
    """
    if k < 1 or l < 1 or k % 2 == 0 or l % 2 == 0:
        raise ValueError("kernel indices must be odd and positive")
    z = PhasePolynomial(1, {((1,), (0,)): 1.0, ((0,), (1,)): 1j})
    zbar = PhasePolynomial(1, {((1,), (0,)): 1.0, ((0,), (1,)): -1j})
    gen = TimeSymbol(1, {(0, 1): z, (0, -1): zbar})
    tk = gen ** k
    tl = gen ** l
    inner = tk.integrate_from_zero()
    bracket = time_poisson_bracket(inner, tl)
    outer = bracket.integrate_from_zero()
    value = gaussian_phase_integral(outer.at_two_pi(), mu)
    if abs(value.imag) > 1e-9 * max(1.0, abs(value)):
        raise ArithmeticError("kernel integral came out non-real")
    return float(value.real) / 4.0


def semiclassical_invariant(vs: SemiclassicalPotential, weight: WeightSpec,
                            l: int, k: int) -> float:
    """Leading k-th order invariant for an hbar-expanded potential:
    integral of f(H0) (V_0^ave)^l V_k^ave.

    The lower-order remainder (which depends only on V_0..V_{k-1}) is not
    included here; recoveries difference it away, and for k = 1 the leading
    term is already the full first-order symbol.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > vs.order:
        raise ValueError(f"potential has no component of order {k}")
    if weight.kind != "gaussian":
        raise ValueError("closed-form path needs a gaussian weight")
    w0 = average_poly(vs.components[0])
    wk = average_poly(vs.components[k])
    return float(gaussian_energy_integral((w0 ** l) * wk, weight.mu).real)


# ----------------------------------------------------------------------
# quantum traces

def trace_moments(clusters: ClusterSet, weight: WeightSpec, phi,
                  rescale_shifts: bool = False,
                  tail_tol: float = 1e-4) -> float:
    """(2*pi*hbar)^n * sum_j f(hbar*(j + n/2)) * sum_k phi(mu_{j,k}).

    The weight is evaluated at the unsubtracted ladder so that the expansion
    of the result in hbar starts at the classical integral with no
    first-order term.  Raises when the weight is not negligible at the top
    of the trusted window.
    """
    hbar = clusters.hbar
    n = clusters.dim
    if not clusters.clusters:
        return 0.0
    top = hbar * (max(c.j for c in clusters.clusters) + n / 2.0)
    bottom = hbar * (min(c.j for c in clusters.clusters) + n / 2.0)
    fb = float(weight(bottom))
    if weight.kind == "bump":
        if weight.center + weight.radius > top:
            raise TrustWindowError("bump weight support exceeds the trusted window")
    elif fb > 0 and float(weight(top)) / fb > tail_tol:
        raise TrustWindowError(
            f"gaussian weight not negligible at the trusted top: "
            f"f(top)/f(bottom) = {float(weight(top)) / fb:.2e} > {tail_tol:g}")
    f = _phi_callable(phi)
    scale = hbar ** -2 if rescale_shifts else 1.0
    total = 0.0
    for c in clusters.clusters:
        total += float(weight(hbar * (c.j + n / 2.0))) * float(np.sum(f(scale * c.shifts)))
    return (2.0 * math.pi * hbar) ** n * total


@dataclass
class FitResult:
    coefficients: dict[int, float]
    residual: float
    condition_number: float


def expansion_fit(hbars: Sequence[float], values: Sequence[float],
                  orders: Sequence[int] = (0, 1, 2),
                  max_condition: float = 1e8) -> FitResult:
    """Least-squares fit of sum_o c_o hbar^o to a series of trace values.

    Needs at least 5 points on a geometric grid; refuses ill-conditioned
    design matrices instead of returning garbage coefficients.
    """
    hbars = np.asarray(hbars, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(hbars) < 5:
        raise ValueError("need at least 5 hbar values")
    ratios = hbars[1:] / hbars[:-1]
    if np.max(np.abs(ratios - ratios[0])) > 1e-9:
        raise ValueError("hbar grid must be geometric")
    a = np.column_stack([hbars ** o for o in orders])
    cond = float(np.linalg.cond(a))
    if cond > max_condition:
        raise IllConditionedError(f"design matrix condition {cond:.3e} > {max_condition:g}")
    coeffs, *_ = np.linalg.lstsq(a, values, rcond=None)
    residual = float(np.linalg.norm(a @ coeffs - values))
    return FitResult(coefficients={o: float(c) for o, c in zip(orders, coeffs)},
                     residual=residual, condition_number=cond)


@dataclass
class InvariantSeries:
    """Computed invariant values over a parameter grid, with provenance."""

    grid: list[float]
    values: list[float]
    provenance: str
    label: str = ""

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if len(g) > 1 and not np.all(np.diff(g) > 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite invariant values")

    def to_json_dict(self) -> dict:
        return {"grid": self.grid, "values": self.values,
                "provenance": self.provenance, "label": self.label}

    def to_csv_rows(self) -> list[tuple]:
        rows = [("grid", "value", "provenance")]
        rows += [(g, v, self.provenance) for g, v in zip(self.grid, self.values)]
        return rows


# ----------------------------------------------------------------------
# efficient trace series over an hbar grid

def _cluster_power_sums_separable(mu1: np.ndarray, mu2: np.ndarray,
                                  j_max: int, power: int) -> np.ndarray:
    """sum over cluster members (a+b=j) of (mu1_a + mu2_b)^power, exactly,
    via binomial convolutions of the per-axis shift arrays."""
    m1 = mu1[:j_max + 1]
    m2 = mu2[:j_max + 1]
    out = np.zeros(j_max + 1)
    for k in range(power + 1):
        conv = np.convolve(m1 ** k, m2 ** (power - k))[:j_max + 1]
        out += math.comb(power, k) * conv
    return out


def _shifts_1d(v: Potential, hbar: float, emax: float,
               trust_fraction: float) -> np.ndarray:
    j_win = int(math.floor(emax / hbar))
    J = int(math.ceil((j_win + 8) / trust_fraction))
    evs = spectrum_1d(v, hbar, J)[:j_win + 1]
    ladder = hbar * np.arange(j_win + 1)
    devs = evs - ladder
    if np.max(np.abs(devs)) >= hbar / 4.0:
        raise TrustWindowError("1-D levels strayed from the ladder by >= hbar/4")
    return devs / hbar ** 2


def trace_moment_series(v: Potential, hbars: Sequence[float], weight: WeightSpec,
                        phi_power: int, emax: float,
                        trust_fraction: float = 0.9,
                        min_margin: float = 2.0,
                        rescale_shifts: bool = False) -> InvariantSeries:
    """Quantum trace moments over an hbar grid, phi(s) = s^phi_power.

    Separable 2-D potentials are combined from per-axis band shifts with
    exact prefix-sum/convolution identities; 1-D and non-separable inputs go
    through explicit cluster detection.  Energies above `emax` are excluded
    (the weight must already be negligible there).
    """
    if phi_power < 0:
        raise ValueError("phi_power must be nonnegative")
    values = []
    for hbar in sorted(hbars):
        scale = hbar ** -2 if rescale_shifts else 1.0
        if v.dim == 1:
            mu = _shifts_1d(v, hbar, emax, trust_fraction)
            if np.max(np.abs(mu)) * hbar ** 2 * min_margin >= hbar / 2.0:
                raise TrustWindowError(
                    f"cluster margin below {min_margin}x at hbar={hbar:g}")
            ladder = hbar * (np.arange(len(mu)) + 0.5)
            total = float(np.sum(np.asarray(weight(ladder)) * (scale * mu) ** phi_power))
            values.append((2.0 * math.pi * hbar) * total)
        elif v.dim == 2 and split_separable(v) is not None:
            v1, v2 = split_separable(v)
            mu1 = _shifts_1d(v1, hbar, emax, trust_fraction)
            mu2 = _shifts_1d(v2, hbar, emax, trust_fraction)
            j_win = int(math.floor(emax / hbar))
            worst = (np.max(np.abs(mu1)) + np.max(np.abs(mu2))) * hbar ** 2
            if worst * min_margin >= hbar / 2.0:
                raise TrustWindowError(
                    f"cluster margin below {min_margin}x at hbar={hbar:g}")
            sums = _cluster_power_sums_separable(scale * mu1, scale * mu2,
                                                 j_win, phi_power)
            ladder = hbar * (np.arange(j_win + 1) + 1.0)
            total = float(np.sum(np.asarray(weight(ladder)) * sums))
            values.append((2.0 * math.pi * hbar) ** 2 * total)
        else:
            basis = basis_for_energy(v.dim, hbar, emax,
                                     trust_fraction=trust_fraction)
            clusters = detect_clusters(compute_spectrum(v, basis))
            clusters.clusters = [c for c in clusters.clusters
                                 if hbar * c.j <= emax]
            if clusters.margin_factor() < min_margin:
                raise TrustWindowError(
                    f"cluster margin {clusters.margin_factor():.2f} below "
                    f"{min_margin}x at hbar={hbar:g}")
            values.append(trace_moments(clusters, weight, phi_power,
                                        rescale_shifts=rescale_shifts))
    return InvariantSeries(grid=sorted(float(h) for h in hbars), values=values,
                           provenance="quantum-trace",
                           label=f"phi=s^{phi_power}")


# ----------------------------------------------------------------------
# Szego comparison

@dataclass
class SzegoResult:
    sphere_value: float
    n_list: list[int]
    means: list[float]
    gaps: list[float]


def szego_compare(v: Potential, energy: float, phi, n_list: Sequence[int],
                  trust_fraction: float = 0.75,
                  force_dense: bool = False) -> SzegoResult:
    """Cluster means of phi(mu) at level N (hbar = energy/N) against the
    sphere average of phi(V^ave); the gaps decay like 1/N."""
    sphere = sphere_invariant(v, energy, phi)
    f = _phi_callable(phi)
    means, gaps = [], []
    for n_level in n_list:
        hbar = energy / n_level
        basis = basis_for_energy(v.dim, hbar, energy * 1.1,
                                 trust_fraction=trust_fraction)
        data = compute_spectrum(v, basis, force_dense=force_dense)
        # only the cluster at the target level is consumed; capping the
        # window keeps far-out clusters from tripping the overlap guard
        data.trusted_max_energy = min(data.trusted_max_energy,
                                      energy + 4.0 * hbar)
        clusters = detect_clusters(data)
        cluster = clusters.get(n_level)
        mean = float(np.mean(f(cluster.shifts)))
        means.append(mean)
        gaps.append(abs(mean - sphere))
    return SzegoResult(sphere_value=sphere, n_list=list(n_list),
                       means=means, gaps=gaps)
