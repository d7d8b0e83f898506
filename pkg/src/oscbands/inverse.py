"""Inverse spectral reconstruction from band-invariant data.

Every recovery consumes an invariant oracle (closed-form classical values, or
quantum cluster data) and emits a RecoveryReport carrying the reconstructed
object, forward-map residuals, condition numbers of any linear solves, and
flags naming exactly the unavoidable ambiguities (global sign, rotation,
axis swap, constant split).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import (Potential, SemiclassicalPotential, a0_invert, average_poly,
                        delta_average, gamma_coeff)
from .invariants import (WeightSpec, gaussian_phase_integral, odd_kernel_integral,
                         second_invariant, sphere_average_poly)
from .oscillator import basis_for_energy, compute_spectrum, detect_clusters
from .phasepoly import PhasePolynomial


class OracleInconsistencyError(ArithmeticError):
    pass


class RankDeficiencyError(ArithmeticError):
    pass


class ClassMembershipError(ValueError):
    pass


class GenericityError(ArithmeticError):
    """The monotone-profile genericity assumption failed on the data."""


@dataclass
class RecoveryReport:
    recovered: dict
    residuals: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    condition_numbers: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"recovered": self.recovered, "residuals": self.residuals,
                "flags": self.flags, "condition_numbers": self.condition_numbers}


# ----------------------------------------------------------------------
# gauge moves

def gauge_rotation(v: Potential, theta: float) -> Potential:
    return v.rotated(theta)


def gauge_translation(vs: SemiclassicalPotential, b,
                      order: int | None = None) -> SemiclassicalPotential:
    """Isospectral family from the change of variables x -> x + b*hbar^2:
    components of V(x + b hbar^2, hbar) + sum_i b_i x_i + hbar^2 |b|^2/2."""
    b = np.asarray(b, dtype=float)
    dim = vs.dim
    if len(b) != dim:
        raise ValueError("shift vector has wrong dimension")
    if order is None:
        order = vs.order + 2
    comps = [dict() for _ in range(order + 1)]

    def add(k: int, alpha, c: float):
        if k <= order and c != 0.0:
            comps[k][alpha] = comps[k].get(alpha, 0.0) + c

    for k, vk in enumerate(vs.components):
        for alpha, c in vk.terms.items():
            # (x + b hbar^2)^alpha expanded; each lowered power costs hbar^2
            def expand(pos, beta, coeff, hpow):
                if pos == dim:
                    add(k + hpow, tuple(beta), coeff)
                    return
                for m in range(alpha[pos] + 1):
                    expand(pos + 1, beta + [m],
                           coeff * math.comb(alpha[pos], m)
                           * b[pos] ** (alpha[pos] - m),
                           hpow + 2 * (alpha[pos] - m))
            expand(0, [], c, 0)
    for i in range(dim):
        e = [0] * dim
        e[i] = 1
        add(0, tuple(e), float(b[i]))
    add(2, (0,) * dim, float(np.dot(b, b)) / 2.0)
    return SemiclassicalPotential([Potential(dim, t) for t in comps])


def gauge_moves(v, move):
    """Dispatcher: move = ("rotation", theta) on a Potential or
    ("translation", b) on a SemiclassicalPotential."""
    kind, arg = move
    if kind == "rotation":
        if not isinstance(v, Potential):
            raise TypeError("rotation acts on a Potential")
        return gauge_rotation(v, float(arg))
    if kind == "translation":
        if isinstance(v, Potential):
            v = SemiclassicalPotential([v])
        return gauge_translation(v, arg)
    raise ValueError(f"unknown gauge move {kind!r}")


# ----------------------------------------------------------------------
# invariant oracles

class ClassicalOracle:
    """Closed-form invariant source computed from a known potential.

    Serves as the ground-truth side of every round-trip test and as the
    reference the quantum source is cross-validated against.
    """

    def __init__(self, v: Potential | SemiclassicalPotential):
        if isinstance(v, Potential):
            v = SemiclassicalPotential([v])
        self.potential = v
        self._v0 = v.components[0]
        self._ave = average_poly(self._v0)
        self._ave_powers = {1: self._ave}
        self._delta = None

    @property
    def dim(self) -> int:
        return self.potential.dim

    @property
    def source(self) -> str:
        return "classical"

    def degree_hint(self) -> int:
        return max(self._v0.degree(), 0)

    def _ave_power(self, k: int) -> PhasePolynomial:
        if k == 0:
            return PhasePolynomial.constant(self.dim, 1.0)
        if k not in self._ave_powers:
            self._ave_powers[k] = self._ave_power(k - 1) * self._ave
        return self._ave_powers[k]

    def first_invariant(self, mu: float, power: int) -> float:
        """integral of e^{-mu |z|^2} (V^ave)^power."""
        return float(gaussian_phase_integral(self._ave_power(power), mu).real)

    def odd_invariant(self, mu: float) -> float:
        if self._delta is None:
            self._delta = delta_average(self._v0)
        return float(gaussian_phase_integral(self._delta, mu).real)

    def second_combination(self, mu: float) -> float:
        """Full second trace coefficient at l = 0 with weight e^{-mu |z|^2}."""
        return second_invariant(self._v0, WeightSpec.gaussian(2.0 * mu), 0)

    def semiclassical_leading(self, k: int, l: int, mu: float) -> float:
        wk = average_poly(self.potential.components[k])
        return float(gaussian_phase_integral(self._ave_power(l) * wk, mu).real)

    def sphere_moment(self, r: float, power: int) -> float:
        return sphere_average_poly(self._ave_power(power), r * r / 2.0)

    def constant_term(self) -> float:
        return self._v0.constant_term()


class QuantumSzegoOracle:
    """Sphere moments measured from one diagonalization (dim 1).

    Cluster shifts at level j estimate the sphere average of V^ave at
    H0 = hbar*j; the radii sqrt(2*hbar*j) form a uniform grid in r^2, which
    is exactly what the even-profile inversion consumes.
    """

    def __init__(self, v: Potential, n_levels: int, tau_max: float,
                 trust_fraction: float = 0.7):
        if v.dim != 1:
            raise ValueError("quantum sphere oracle implemented for dim 1")
        self.hbar = tau_max / (2.0 * n_levels)
        basis = basis_for_energy(1, self.hbar, tau_max / 2.0 * 1.05,
                                 trust_fraction=trust_fraction)
        data = compute_spectrum(v, basis)
        # only levels up to the requested radius are consumed
        data.trusted_max_energy = min(data.trusted_max_energy,
                                      tau_max / 2.0 + 2.0 * self.hbar)
        clusters = detect_clusters(data)
        shifts = {c.j: float(c.shifts[0]) for c in clusters.clusters}
        self.levels = list(range(1, n_levels + 1))
        if any(j not in shifts for j in self.levels):
            raise OracleInconsistencyError("trusted window too small for requested levels")
        self.tau_grid = np.array([2.0 * self.hbar * j for j in self.levels])
        self.samples = np.array([shifts[j] for j in self.levels])

    @property
    def source(self) -> str:
        return "quantum"

    def sphere_moment_samples(self) -> tuple[np.ndarray, np.ndarray]:
        return self.tau_grid, self.samples

    def cross_validate(self, classical: ClassicalOracle) -> float:
        """Largest deviation from the classical sphere averages (the measured
        Szego gap of this data set)."""
        gaps = [abs(s - classical.sphere_moment(math.sqrt(t), 1))
                for t, s in zip(self.tau_grid, self.samples)]
        return max(gaps)


# ----------------------------------------------------------------------
# inverse-power extraction  (values  f(mu) = sum_d c_d mu^{-(offset+d)})

def _inverse_power_coefficients(fn, offset: int, d_min: int, d_max: int,
                                t_lo: float = 0.2, t_hi: float = 1.45):
    """Recover the c_d from point values of fn.

    In t = 1/mu the rescaled data g(t) = fn(1/t) * t^{-(offset+d_min)} is a
    polynomial of degree d_max - d_min; fitting it at Chebyshev nodes keeps
    the extraction conditioning flat, and the power-basis conversion is exact
    for these small degrees.  Returns ({d: c_d}, condition_number).
    """
    deg = d_max - d_min
    m = 2 * (deg + 1)
    ks = np.arange(m)
    t = 0.5 * (t_lo + t_hi) + 0.5 * (t_hi - t_lo) * np.cos((2 * ks + 1) * math.pi / (2 * m))
    g = np.array([fn(1.0 / ti) * ti ** -(offset + d_min) for ti in t])
    design = np.polynomial.chebyshev.chebvander(
        (2 * t - (t_lo + t_hi)) / (t_hi - t_lo), deg)
    cond = float(np.linalg.cond(design))
    cheb, *_ = np.linalg.lstsq(design, g, rcond=None)
    # back to plain powers of t: compose p((2t - (lo+hi))/(hi-lo))
    mapped = np.polynomial.chebyshev.cheb2poly(cheb)
    a_lin = 2.0 / (t_hi - t_lo)
    b_lin = -(t_lo + t_hi) / (t_hi - t_lo)
    comp = np.zeros(deg + 1)
    lin_pow = np.array([1.0])
    for c in mapped:
        comp[: len(lin_pow)] += c * lin_pow
        lin_pow = np.convolve(lin_pow, [b_lin, a_lin])
    return {d_min + i: float(c) for i, c in enumerate(comp)}, cond


# ----------------------------------------------------------------------
# even 1-D profiles (Abel-type inversion)

def recover_even_1d(tau_grid, samples) -> tuple[np.ndarray, RecoveryReport]:
    """Recover an even 1-D potential from sphere averages of its flow average.

    Input: g(tau) on a uniform tau = r^2 grid, where g is the sphere average
    at radius r.  The forward map is the half-integral
        g(r) = (2/pi) int_0^r V(s) (r^2-s^2)^{-1/2} ds,
    inverted by product integration:
        V(sqrt(T)) = g(0) + sqrt(T) * int_0^T g'(tau) (T-tau)^{-1/2} dtau.
    Returns V sampled at x = sqrt(tau) and a report with the forward
    round-trip residual.
    """
    tau = np.asarray(tau_grid, dtype=float)
    g = np.asarray(samples, dtype=float)
    if len(tau) != len(g) or len(tau) < 8:
        raise ValueError("need matching grids with at least 8 samples")
    h = tau[1] - tau[0]
    if np.max(np.abs(np.diff(tau) - h)) > 1e-9 * h:
        raise ValueError("tau grid must be uniform")

    if abs(tau[0] - h) > 1e-9 * h:
        raise ValueError("grid must start at the first positive node tau = h")
    # extend to tau = 0 by quadratic extrapolation, then differentiate
    c = np.polyfit(tau[:3], g[:3], 2)
    g0 = float(np.polyval(c, 0.0))
    gext = np.concatenate([[g0], g])
    text = np.concatenate([[0.0], tau])
    n = len(text)
    gp = np.gradient(gext, text)

    # product integration of piecewise-linear g' against (T-tau)^{-1/2}
    def half_kernel_integral(t_idx: int) -> float:
        T = text[t_idx]
        total = 0.0
        for i in range(t_idx):
            a, b = text[i], text[i + 1]
            fa, fb = gp[i], gp[i + 1]
            # int_a^b (fa + (s-a)(fb-fa)/h) (T-s)^{-1/2} ds, closed form
            wa, wb = math.sqrt(T - a), math.sqrt(max(T - b, 0.0))
            i0 = 2.0 * (wa - wb)
            # int (s-a)(T-s)^{-1/2} ds = int ((T-a)-(T-s))(T-s)^{-1/2}
            i1 = (T - a) * i0 - (2.0 / 3.0) * (wa ** 3 - wb ** 3)
            total += fa * i0 + (fb - fa) / h * i1
        return total

    v = np.empty(len(tau))
    for k in range(1, n):
        v[k - 1] = g0 + math.sqrt(text[k]) * half_kernel_integral(k)

    # forward residual: circle average of the recovered profile vs input
    xs = np.sqrt(tau)
    def forward(r):
        th = np.linspace(0.0, 2.0 * math.pi, 256, endpoint=False)
        pts = np.abs(r * np.cos(th))
        vals = np.interp(pts, xs, v, left=g0, right=v[-1])
        return float(np.mean(vals))
    idx = np.linspace(2, len(tau) - 1, 12).astype(int)
    residual = max(abs(forward(math.sqrt(tau[i])) - g[i]) for i in idx)

    report = RecoveryReport(
        recovered={"x": [float(s) for s in xs], "values": [float(s) for s in v]},
        residuals={"forward_sup": residual})
    return v, report


def recover_even_1d_from_oracle(oracle, tau_max: float, n_grid: int
                                ) -> tuple[np.ndarray, np.ndarray, RecoveryReport]:
    """Convenience wrapper: sample the oracle's first sphere moment on a
    uniform tau grid and invert."""
    if isinstance(oracle, QuantumSzegoOracle):
        tau, g = oracle.sphere_moment_samples()
    else:
        tau = np.linspace(tau_max / n_grid, tau_max, n_grid)
        g = np.array([oracle.sphere_moment(math.sqrt(t), 1) for t in tau])
    v, report = recover_even_1d(tau, g)
    return np.sqrt(tau), v, report


# ----------------------------------------------------------------------
# odd 1-D analytic potentials

def _odd_kernel_constants(d_max: int) -> dict[tuple[int, int], float]:
    """beta(k, l) with I(mu) = sum_{k,l odd} a_k a_l beta(k,l) mu^{-(k+l)/2}
    for the 1-D gaussian-weighted invariant of V^Delta."""
    out = {}
    for k in range(1, d_max + 1, 2):
        for l in range(1, d_max + 1, 2):
            out[(k, l)] = odd_kernel_integral(k, l, 1.0) / (math.pi * 2 ** (k + l))
    return out


def recover_odd_1d(oracle, max_degree: int,
                   tol: float = 1e-8) -> tuple[dict[int, float], RecoveryReport]:
    """Recover the coefficients of an odd 1-D analytic potential, up to one
    global sign, from gaussian-weighted invariants of V^Delta.

    The invariant is a finite sum of pure powers mu^{-m}; the m-th
    coefficient couples the products a_k a_l with k+l = 2m through universal
    kernel constants.  Proceeding upward in m, the leading coefficient is a
    square and each further coefficient is linear in one new unknown.
    """
    if oracle.dim != 1:
        raise ValueError("odd recovery is one-dimensional")
    if max_degree % 2 == 0:
        max_degree -= 1
    beta = _odd_kernel_constants(max_degree)
    coeffs, cond = _inverse_power_coefficients(
        oracle.odd_invariant, offset=0, d_min=1, d_max=max_degree)

    scale = max(max(abs(c) for c in coeffs.values()), tol)
    lead = None
    for m in sorted(coeffs):
        if abs(coeffs[m]) > tol * scale:
            lead = m
            break
    a: dict[int, float] = {k: 0.0 for k in range(1, max_degree + 1, 2)}
    flags: list[str] = []
    if lead is None:
        report = RecoveryReport(recovered={"coefficients": a},
                                residuals={"expansion": 0.0},
                                condition_numbers={"mu_vandermonde": cond})
        return a, report
    if lead % 2 == 0:
        raise OracleInconsistencyError(
            "leading invariant power is even; data is not an odd potential's")

    sq = coeffs[lead] / beta[(lead, lead)]
    if sq <= 0:
        raise OracleInconsistencyError(
            f"leading coefficient ratio {sq:.3e} is not a positive square")
    a[lead] = math.sqrt(sq)
    flags.append("global-sign")

    for m in range(lead + 1, max_degree + 1):
        new_deg = 2 * m - lead
        if new_deg > max_degree:
            continue  # pure consistency equation; checked by the residual
        known = 0.0
        for k in range(lead, 2 * m - lead + 1, 2):
            l = 2 * m - k
            if not (lead <= l <= max_degree) or k > max_degree:
                continue
            if k == new_deg or l == new_deg:
                continue
            known += a[k] * a[l] * beta[(k, l)]
        pair_const = beta[(lead, new_deg)] + beta[(new_deg, lead)]
        a[new_deg] = (coeffs.get(m, 0.0) - known) / (a[lead] * pair_const)

    # sign normalization: first nonzero coefficient positive (it is, by the
    # square root); residual: rebuild the expansion from the recovery
    resid = 0.0
    for m in range(1, max_degree + 1):
        pred = 0.0
        for k in range(1, max_degree + 1, 2):
            l = 2 * m - k
            if 1 <= l <= max_degree and l % 2 == 1:
                pred += a[k] * a[l] * beta[(k, l)]
        resid = max(resid, abs(pred - coeffs.get(m, 0.0)))
    report = RecoveryReport(
        recovered={"coefficients": {int(k): float(val) for k, val in a.items()}},
        residuals={"expansion": resid / scale},
        flags=flags,
        condition_numbers={"mu_vandermonde": cond})
    if resid / scale > 1e-5:
        raise OracleInconsistencyError(
            f"reconstructed expansion residual {resid / scale:.2e} too large")
    return a, report


# ----------------------------------------------------------------------
# Hessian (quadratic data) from exponential moments

def _quadratic_moments(oracle, n: int, count: int) -> tuple[list[float], float]:
    """M_j = integral of e^{-|z|^2} A^j for j = 1..count, where A is the
    quadratic part of the averaged symbol, isolated by degree from the
    gaussian-weight powers of the first invariants."""
    dv = max(oracle.degree_hint(), 2)
    moments = []
    worst_cond = 0.0
    for j in range(1, count + 1):
        k = j - 1
        d_max = max((k + 1) * dv // 2, j)
        coeffs, cond = _inverse_power_coefficients(
            lambda mu, p=k + 1: oracle.first_invariant(mu, p),
            offset=n, d_min=k + 1, d_max=d_max)
        moments.append(coeffs[j])
        worst_cond = max(worst_cond, cond)
    return moments, worst_cond


def recover_hessian(oracle, n: int | None = None) -> tuple[list[float], RecoveryReport]:
    """Multiset {a_i} of quadratic coefficients of the averaged symbol
    (A = sum a_i |z_i|^2) from its exponential moments.

    The j-th moment equals pi^n j! h_j(a) (complete homogeneous symmetric
    polynomials of independent exponential moments); Newton-type recursion
    converts to elementary symmetric functions and the characteristic
    polynomial's roots come from its companion matrix.  Only the multiset is
    recoverable (rotations reshuffle the axes).  The Hessian eigenvalues of
    the potential itself are 4*a_i.
    """
    if n is None:
        n = oracle.dim
    if abs(oracle.constant_term()) > 1e-10:
        raise ValueError("remove the constant term before Hessian recovery")
    moments, cond = _quadratic_moments(oracle, n, n)
    h = [1.0] + [m / (math.pi ** n * math.factorial(j + 1))
                 for j, m in enumerate(moments)]
    e = [1.0]
    for k in range(1, n + 1):
        val = 0.0
        for i in range(k):
            val += ((-1) ** i) * e[i] * h[k - i]
        e.append(((-1) ** (k + 1)) * val)
    # char poly lambda^n - e1 lambda^{n-1} + ... -> companion-matrix roots
    poly = [((-1) ** k) * e[k] for k in range(n + 1)]  # monic, descending
    comp = np.zeros((n, n))
    for i in range(1, n):
        comp[i, i - 1] = 1.0
    for i in range(n):
        comp[i, -1] = -poly[n - i]
    roots = np.linalg.eigvals(comp)
    if np.max(np.abs(roots.imag)) > 1e-7 * max(1.0, np.max(np.abs(roots))):
        raise OracleInconsistencyError("complex Hessian roots from real moments")
    a = sorted(float(r) for r in roots.real)
    # residual: rebuild the moments from the recovered multiset
    resid = 0.0
    for j in range(1, n + 1):
        pred = math.pi ** n * math.factorial(j) * _complete_homogeneous(a, j)
        resid = max(resid, abs(pred - moments[j - 1]) / max(1.0, abs(moments[j - 1])))
    sep = min(abs(a[i + 1] - a[i]) for i in range(n - 1)) if n > 1 else math.inf
    report = RecoveryReport(
        recovered={"averaged_coefficients": a,
                   "hessian_eigenvalues": [4.0 * x for x in a]},
        residuals={"moment_rebuild": resid, "min_separation": sep},
        flags=["rotation"],
        condition_numbers={"mu_vandermonde": cond})
    return a, report


def _complete_homogeneous(a, j: int) -> float:
    """h_j(a): sum of all degree-j monomials in the a_i (small j, small n)."""
    n = len(a)
    def rec(i, remaining):
        if i == n - 1:
            return a[i] ** remaining
        return sum(a[i] ** m * rec(i + 1, remaining - m) for m in range(remaining + 1))
    return rec(0, j) if j > 0 else 1.0


# ----------------------------------------------------------------------
# class membership (no quadratic, no quartic term) and the linear term

def class_membership(oracle, tol: float = 1e-8) -> dict:
    """Spectral test for vanishing quadratic and quartic terms.

    Uses constant-corrected gaussian moments: the degree-2 and degree-4
    coefficients of the first two invariant powers decide A = 0, and once
    A = 0 the degree-8 coefficient of the squared average is the L^2 mass of
    the quartic average.
    """
    n = oracle.dim
    dv = max(oracle.degree_hint(), 2)
    c0 = oracle.constant_term()
    mass = math.pi ** n

    def centered_sq(mu):
        return (oracle.first_invariant(mu, 2)
                - 2.0 * c0 * oracle.first_invariant(mu, 1)
                + c0 ** 2 * mass * mu ** -n)

    lin, cond1 = _inverse_power_coefficients(
        lambda mu: oracle.first_invariant(mu, 1) - c0 * mass * mu ** -n,
        offset=n, d_min=1, d_max=max(dv // 2, 1))
    sq, cond2 = _inverse_power_coefficients(centered_sq, offset=n,
                                            d_min=2, d_max=max(dv, 4))
    scale = max(max(abs(v) for v in sq.values()), 1.0)
    v2_zero = abs(lin.get(1, 0.0)) <= tol * scale and abs(sq.get(2, 0.0)) <= tol * scale
    v4_zero = None
    if v2_zero:
        v4_zero = abs(sq.get(4, 0.0)) <= tol * scale
    return {"v2_zero": v2_zero, "v4_zero": bool(v4_zero) if v4_zero is not None else False,
            "in_class": bool(v2_zero and v4_zero),
            "details": {"deg2_mass": sq.get(2, 0.0), "deg4_mass": sq.get(4, 0.0),
                        "conditions": [cond1, cond2]}}


def recover_linear_norm(oracle) -> tuple[float, RecoveryReport]:
    """|grad V(0)|^2 for potentials with no quadratic and no quartic term.

    The slowest-decaying gaussian coefficient of the full second trace
    combination is produced by the linear term alone; dividing by the
    universal linear-kernel constant (the k = l = 1 kernel integral) gives
    the squared gradient norm.
    """
    member = class_membership(oracle)
    if not member["in_class"]:
        raise ClassMembershipError(
            f"potential outside the admissible class: {member}")
    n = oracle.dim
    dv = max(oracle.degree_hint(), 2)
    c0 = oracle.constant_term()

    def corrected(mu):
        return (oracle.second_combination(mu)
                + c0 * n * math.pi ** n * mu ** (2 - n) / 6.0)

    coeffs, cond = _inverse_power_coefficients(corrected, offset=n,
                                               d_min=0, d_max=dv + 2)
    # per-coordinate constant from the k=l=1 kernel at unit weight
    kappa = odd_kernel_integral(1, 1, 1.0) / (4.0 * math.pi)
    norm_sq = coeffs[0] / (kappa * math.pi ** (n - 1))
    resid = abs(coeffs[0] - norm_sq * kappa * math.pi ** (n - 1))
    report = RecoveryReport(
        recovered={"grad_norm_squared": float(norm_sq)},
        residuals={"kernel_identity": resid},
        condition_numbers={"mu_vandermonde": cond})
    return float(norm_sq), report


# ----------------------------------------------------------------------
# separable potentials f1(x1^2) + f2(x2^2) from sphere moments

def _poly_int01(coeffs: np.ndarray) -> float:
    return float(sum(c / (i + 1) for i, c in enumerate(coeffs)))


def _fit_monotone_quantile(moments: np.ndarray, degree: int,
                           max_iter: int = 120) -> tuple[np.ndarray, float]:
    """Polynomial quantile function on [0,1] matching the given power moments.

    Gauss-Newton with Levenberg damping on the exact polynomial moment map;
    initialized from the mean/variance line with positive slope, so the fit
    lands on the increasing rearrangement.
    """
    m1 = moments[0]
    var = max(moments[1] - m1 ** 2, 0.0)
    c = np.zeros(degree + 1)
    c[0] = m1 - 0.5 * math.sqrt(12.0 * var)
    c[1] = math.sqrt(12.0 * var)
    scales = np.array([max(abs(m), max(abs(m1), 1e-6) ** (k + 1))
                       for k, m in enumerate(moments)])

    def residual(cv):
        res = np.empty(len(moments))
        power = np.array([1.0])
        for k in range(len(moments)):
            power = np.convolve(power, cv)
            res[k] = (_poly_int01(power) - moments[k]) / scales[k]
        return res

    def jacobian(cv):
        jac = np.empty((len(moments), len(cv)))
        power = np.array([1.0])
        for k in range(len(moments)):
            for j in range(len(cv)):
                jac[k, j] = (k + 1) * sum(
                    p / (i + j + 1) for i, p in enumerate(power))
                jac[k, j] /= scales[k]
            power = np.convolve(power, cv)
        return jac

    lam = 1e-6
    res = residual(c)
    for _ in range(max_iter):
        jac = jacobian(c)
        jtj = jac.T @ jac
        damp = np.diag(np.maximum(np.diag(jtj), 1e-12 * max(np.max(np.diag(jtj)), 1e-300)))
        try:
            step = np.linalg.solve(jtj + lam * damp, -jac.T @ res)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        cand = c + step
        cand_res = residual(cand)
        if np.linalg.norm(cand_res) < np.linalg.norm(res):
            c, res = cand, cand_res
            lam = max(lam / 4.0, 1e-12)
            if np.linalg.norm(res) < 1e-13:
                break
        else:
            lam *= 8.0
            if lam > 1e10:
                break
    return c, float(np.linalg.norm(res))


def _isotonic(vals: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators projection onto nondecreasing sequences."""
    vals = vals.astype(float).copy()
    weights = np.ones_like(vals)
    blocks = [[v, w] for v, w in zip(vals, weights)]
    merged = []
    for v, w in blocks:
        merged.append([v, w])
        while len(merged) > 1 and merged[-2][0] > merged[-1][0]:
            v2, w2 = merged.pop()
            v1, w1 = merged.pop()
            merged.append([(v1 * w1 + v2 * w2) / (w1 + w2), w1 + w2])
    out = []
    for v, w in merged:
        out.extend([v] * int(round(w)))
    return np.array(out)


def recover_separable(oracle, r_grid, n_moments: int = 12, n_nodes: int = 200,
                      quantile_degree: int = 6,
                      consistency_tol: float = 5e-3
                      ) -> tuple[dict, RecoveryReport]:
    """Recover the two averaged profiles of V = f1(x1^2) + f2(x2^2) from
    sphere moments of the averaged symbol.

    On each sphere the averaged symbol restricted to the action segment is
    psi_r(u) = phi1(r^2 (1-u)) + phi2(r^2 u); its power moments determine its
    law on [0,1], and under the genericity assumption (psi_r monotone) the
    increasing quantile IS psi_r up to the reflection u -> 1-u, which is the
    axis-swap ambiguity.  Boundary values split psi into the two profiles up
    to a common constant.  A cross-radius separability check guards the
    genericity assumption.
    """
    r_grid = sorted(float(r) for r in r_grid)
    rho = np.array([r * r for r in r_grid])
    u_nodes = np.linspace(0.0, 1.0, n_nodes)
    psi_nodes = []
    fit_residual = 0.0
    for r in r_grid:
        moments = np.array([oracle.sphere_moment(r, k)
                            for k in range(1, n_moments + 1)])
        coeffs, res = _fit_monotone_quantile(moments, quantile_degree)
        fit_residual = max(fit_residual, res)
        vals = np.polyval(coeffs[::-1], u_nodes)
        psi_nodes.append(_isotonic(vals))
    psi_nodes = np.array(psi_nodes)

    # split: phi1(rho) = psi(0) (absorbing the constant), phi2 from psi(1)
    left = psi_nodes[:, 0]
    right = psi_nodes[:, -1]
    base = float(np.polyval(np.polyfit(rho[:3], left[:3], 2), 0.0))
    phi1 = left.copy()
    phi2 = right - base

    scale = max(float(np.max(np.abs(psi_nodes))), 1e-12)

    rho_ext = np.concatenate([[0.0], rho])
    phi1_ext = np.concatenate([[base], phi1])
    phi2_ext = np.concatenate([[0.0], phi2])

    def predict():
        worst = 0.0
        for i in range(len(r_grid)):
            pred = (np.interp(rho[i] * (1.0 - u_nodes), rho_ext, phi1_ext)
                    + np.interp(rho[i] * u_nodes, rho_ext, phi2_ext))
            worst = max(worst, float(np.max(np.abs(pred - psi_nodes[i]))))
        return worst

    consistency = predict()
    flags = ["axis-swap", "constant-split"]
    if consistency > consistency_tol * scale:
        raise GenericityError(
            f"separability consistency residual {consistency:.3e} exceeds "
            f"{consistency_tol * scale:.3e}; monotone-profile assumption violated")
    report = RecoveryReport(
        recovered={"rho": [float(t) for t in rho],
                   "phi1": [float(v) for v in phi1],
                   "phi2": [float(v) for v in phi2]},
        residuals={"moment_fit": fit_residual, "consistency": consistency},
        flags=flags)
    return {"rho": rho, "phi1": phi1, "phi2": phi2}, report


# ----------------------------------------------------------------------
# even analytic potentials in two dimensions

def _quad_phase(c1: float, c2: float) -> PhasePolynomial:
    return PhasePolynomial(2, {((2, 0), (0, 0)): c1, ((0, 0), (2, 0)): c1,
                               ((0, 2), (0, 0)): c2, ((0, 0), (0, 2)): c2})


def _solve_equilibrated(mat: np.ndarray, rhs: np.ndarray,
                        max_condition: float = 1e8) -> tuple[np.ndarray, float]:
    col = np.linalg.norm(mat, axis=0)
    if np.any(col == 0):
        raise RankDeficiencyError("zero column in recovery system")
    scaled = mat / col
    cond = float(np.linalg.cond(scaled))
    if cond > max_condition:
        raise RankDeficiencyError(
            f"recovery system condition {cond:.3e} beyond {max_condition:g} "
            "(coincident quadratic coefficients?)")
    sol, *_ = np.linalg.lstsq(scaled, rhs, rcond=None)
    return sol / col, cond


def recover_analytic_2d(oracle, max_degree: int,
                        separation_tol: float = 1e-6
                        ) -> tuple[Potential, RecoveryReport]:
    """Recover an even-in-each-variable analytic potential of bounded degree
    whose quadratic part has distinct averaged coefficients.

    Degree induction: gaussian-moment coefficients isolate, at each even
    degree 2m, the pairings of A^k against the unknown degree-2m average;
    subtracting the known lower-degree cross terms leaves a linear system for
    the rotation-invariant component, inverted by a0_invert.  Coincident
    quadratic coefficients make the system rank-deficient.
    """
    if max_degree < 2 or max_degree % 2:
        raise ValueError("max_degree must be an even integer >= 2")
    a_coeffs, hess_report = recover_hessian(oracle, 2)
    c1, c2 = a_coeffs
    scale = max(abs(c1), abs(c2), 1.0)
    if abs(c1 - c2) <= separation_tol * scale:
        raise RankDeficiencyError(
            f"quadratic coefficients {c1:.6g}, {c2:.6g} not distinct")
    conds = {"hessian": hess_report.condition_numbers["mu_vandermonde"]}

    recovered = Potential(2, {(2, 0): 2.0 * c1, (0, 2): 2.0 * c2})
    known_ave = _quad_phase(c1, c2)
    dv = max(oracle.degree_hint(), max_degree)

    for two_m in range(4, max_degree + 1, 2):
        m = two_m // 2
        # targets: degree-isolated gaussian coefficients
        u_vals = []
        for k in range(0, m + 1):
            d_max = (k + 1) * dv // 2
            # small-t window keeps the low-degree targets above the large
            # high-degree coefficients of the averaged-symbol powers
            coeffs, cond = _inverse_power_coefficients(
                lambda mu, p=k + 1: oracle.first_invariant(mu, p),
                offset=2, d_min=k + 1, d_max=max(d_max, k + m),
                t_lo=0.05, t_hi=0.45)
            conds[f"extract_deg{two_m}_k{k}"] = cond
            t_k = coeffs[k + m]
            cross = known_ave ** (k + 1)
            s_k = float(gaussian_phase_integral(
                cross.homogeneous_part(2 * (k + m)), 1.0).real)
            u_vals.append(t_k - s_k)
        # linear system for the invariant component of the degree-2m average
        basis = [(i, m - i) for i in range(m + 1)]
        mat = np.empty((m + 1, m + 1))
        for k in range(0, m + 1):
            for col, (i, j) in enumerate(basis):
                val = 0.0
                for s in range(k + 1):
                    val += (math.comb(k, s) * c1 ** s * c2 ** (k - s)
                            * math.factorial(s + i) * math.factorial(k - s + j))
                mat[k, col] = (k + 1) * math.pi ** 2 * val
        sol, cond = _solve_equilibrated(mat, np.array(u_vals))
        conds[f"solve_deg{two_m}"] = cond
        a0_part = PhasePolynomial(2, {((2 * i, 2 * j), (0, 0)): q
                                      for (i, j), q in zip(basis, sol)})
        v_2m = a0_invert(a0_part)
        add_terms = {(a[0], a[1]): c.real for (a, b), c in v_2m.terms.items()}
        recovered = recovered + Potential(2, add_terms)
        known_ave = known_ave + average_poly(Potential(2, add_terms))

    # forward residual at a fresh weight
    resid = 0.0
    check = ClassicalOracle(recovered)
    for power in (1, 2):
        mine = check.first_invariant(0.9, power)
        theirs = oracle.first_invariant(0.9, power)
        resid = max(resid, abs(mine - theirs) / max(1.0, abs(theirs)))
    report = RecoveryReport(
        recovered={"potential": recovered.to_json_dict()},
        residuals={"forward_invariants": resid},
        flags=["rotation"],
        condition_numbers=conds)
    return recovered, report


# ----------------------------------------------------------------------
# semiclassical expansions in two dimensions

def recover_semiclassical_2d(oracle, max_degree: int, k_max: int
                             ) -> tuple[SemiclassicalPotential, RecoveryReport]:
    """Recover V_0 + hbar V_1 + ... (all components even in each variable)
    from the leading semiclassical invariants, inductively in the order.

    V_0 comes from the analytic recovery.  For each k >= 1 the leading k-th
    invariants are linear in V_k; with a quadratic V_0 of distinct
    coefficients the gaussian-times-power weights separate the two radial
    variables (a wedge of exponential moments), determining the invariant
    component of V_k^ave on the even-monomial basis, and a0_invert finishes.
    Non-quadratic V_0 uses the same data through an explicit linear solve.
    """
    v0, base_report = recover_analytic_2d(oracle, max_degree)
    conds = dict(base_report.condition_numbers)
    residuals = dict(base_report.residuals)
    components = [v0]
    quad_only = all(sum(a) <= 2 for a in v0.terms)
    c1 = v0.terms.get((2, 0), 0.0) / 2.0
    c2 = v0.terms.get((0, 2), 0.0) / 2.0
    half = max_degree // 2
    basis = [(i, j) for i in range(half + 1) for j in range(half + 1 - i)]
    mus = (0.8, 1.3)
    v0_ave = average_poly(v0)

    for k in range(1, k_max + 1):
        rows = []
        rhs = []
        for l in range(0, half + 2):
            for mu in mus:
                rhs.append(oracle.semiclassical_leading(k, l, mu))
                row = np.empty(len(basis))
                for col, (i, j) in enumerate(basis):
                    if quad_only:
                        val = 0.0
                        for s in range(l + 1):
                            val += (math.comb(l, s) * c1 ** s * c2 ** (l - s)
                                    * math.factorial(s + i) / mu ** (s + i + 1)
                                    * math.factorial(l - s + j) / mu ** (l - s + j + 1))
                        row[col] = math.pi ** 2 * val
                    else:
                        e_ave = average_poly(Potential(2, {(2 * i, 2 * j): 1.0}))
                        row[col] = float(gaussian_phase_integral(
                            (v0_ave ** l) * e_ave, mu).real)
                rows.append(row)
        mat = np.array(rows)
        sol, cond = _solve_equilibrated(mat, np.array(rhs))
        conds[f"solve_order{k}"] = cond
        if quad_only:
            a0_part = PhasePolynomial(2, {((2 * i, 2 * j), (0, 0)): q
                                          for (i, j), q in zip(basis, sol)})
            vk_poly = a0_invert(a0_part)
            vk = Potential(2, {(a[0], a[1]): c.real
                               for (a, b), c in vk_poly.terms.items()})
        else:
            vk = Potential(2, {(2 * i, 2 * j): q
                               for (i, j), q in zip(basis, sol)})
        vk = vk.chop(1e-9)
        components.append(vk)
        check = ClassicalOracle(SemiclassicalPotential(
            components + [Potential.zero(2)] * (k_max - k)))
        fwd = max(abs(check.semiclassical_leading(k, l, 1.1)
                      - oracle.semiclassical_leading(k, l, 1.1))
                  for l in range(0, half + 1))
        residuals[f"forward_order{k}"] = fwd

    vs = SemiclassicalPotential(components)
    report = RecoveryReport(
        recovered={"semiclassical_potential": vs.to_json_dict()},
        residuals=residuals,
        flags=["rotation", "even-parts-only"],
        condition_numbers=conds)
    return vs, report


# ----------------------------------------------------------------------
# formal rigidity certificate

def rigidity_svd(a: float, b: float, max_degree: int,
                 n_lambda: int = 6, n_mu: int = 6) -> tuple[float, RecoveryReport]:
    """Smallest singular value (after column equilibration) of the linearized
    isospectral map W -> gaussian-moment functionals of A_0 W on even
    polynomials of degree <= max_degree.

    The weights e^{-mu1 x1^2 - mu2 x2^2} are sampled on the wedge
    (mu1, mu2) = (lam + mu*a, lam + mu*b); for a = b the wedge collapses to
    the diagonal and the map loses rank, exhibiting the degenerate case.
    """
    half = max_degree // 2
    basis = [(i, j) for i in range(half + 1) for j in range(half + 1 - i)]
    lam0 = 0.6 + max(0.0, -min(a, b)) * 1.6
    lams = [lam0 * 1.35 ** i for i in range(n_lambda)]
    mus = [0.15 * 1.3 ** i for i in range(n_mu)]
    rows = []
    for lam in lams:
        for mu in mus:
            mu1 = lam + mu * a
            mu2 = lam + mu * b
            if mu1 <= 0 or mu2 <= 0:
                continue
            row = [gamma_coeff(i, 0) * gamma_coeff(j, 0)
                   * math.gamma(i + 0.5) * math.gamma(j + 0.5)
                   * mu1 ** -(i + 0.5) * mu2 ** -(j + 0.5)
                   for (i, j) in basis]
            rows.append(row)
    mat = np.array(rows)
    col = np.linalg.norm(mat, axis=0)
    sigma = np.linalg.svd(mat / col, compute_uv=False)
    report = RecoveryReport(
        recovered={"sigma_min": float(sigma[-1]), "basis_size": len(basis)},
        residuals={},
        condition_numbers={"sigma_max_over_min": float(sigma[0] / max(sigma[-1], 1e-300))})
    return float(sigma[-1]), report
