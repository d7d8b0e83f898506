"""Verification suites anchoring the sign conventions and symbolic identities.

Each suite returns a list of (check_name, passed, detail) triples.  The same
code backs the CLI's convention-audit task and the acceptance tests, so a
report and the test suite can never disagree about what was checked.
"""

from __future__ import annotations

import math

import numpy as np

from .averaging import (Potential, a0_invert, average_numeric, average_poly,
                        delta_average, gamma_coeff, r_n_decompose)
from .oscillator import BasisSpec, compute_spectrum, detect_clusters
from .phasepoly import PhasePolynomial
from .symbolcalc import (higher_bracket, moyal_power_expansion,
                         poisson_bracket, star_power_series, transport_symbols)
from .timesym import ExpTimePoly


def _check(name: str, ok: bool, detail: str) -> tuple[str, bool, str]:
    return name, bool(ok), detail


def _random_potential(rng, dim: int, degree: int) -> Potential:
    terms = {}
    def rec(alpha, pos, budget):
        if pos == dim:
            terms[tuple(alpha)] = rng.uniform(-1, 1)
            return
        for e in range(budget + 1):
            rec(alpha + [e], pos + 1, budget - e)
    rec([], 0, degree)
    return Potential(dim, terms)


# ----------------------------------------------------------------------

def linear_anchor(params: dict) -> list[tuple[str, bool, str]]:
    """The exactly solvable linear perturbation pins every sign at once:
    eigenvalues hbar*j - hbar^4/2, all band shifts -hbar^2/2, and the
    second-order average of x equal to the constant -1/2."""
    hbars = params.get("hbars", [0.2, 0.1, 0.05])
    J = params.get("J", 400)
    tol = params.get("tol", 1e-9)
    out = []
    v = Potential.from_x_power(1)
    for hbar in hbars:
        data = compute_spectrum(v, BasisSpec(dim=1, hbar=hbar, J=J))
        trusted = data.trusted()
        j = np.round(trusted / hbar).astype(int)
        exact = hbar * j - hbar ** 4 / 2.0
        worst = float(np.max(np.abs(trusted - exact)))
        out.append(_check(f"ladder-shift-hbar={hbar}", worst <= tol,
                          f"max |E - (hbar j - hbar^4/2)| = {worst:.3e}"))
        clusters = detect_clusters(data)
        mus = np.concatenate([c.shifts for c in clusters.clusters])
        worst_mu = float(np.max(np.abs(mus + hbar ** 2 / 2.0)))
        out.append(_check(f"band-shifts-hbar={hbar}", worst_mu <= tol,
                          f"max |mu + hbar^2/2| = {worst_mu:.3e}"))
    delta = delta_average(v)
    expected = PhasePolynomial.constant(1, -0.5)
    out.append(_check("delta-average-linear", delta.isclose(expected, 1e-12),
                      f"V^Delta(x) = {delta!r}"))
    return out


def averaging_identities(params: dict) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(params.get("seed", 20240801))
    n_pot = params.get("n_potentials", 20)
    n_pts = params.get("n_points", 100)
    out = []

    worst = 0.0
    for i in range(n_pot):
        dim = 1 + (i % 2)
        v = _random_potential(rng, dim, rng.integers(2, 9))
        ave = average_poly(v)
        nodes = max(16, 2 * v.degree() + 8)
        for _ in range(n_pts // n_pot + 1):
            x = rng.uniform(-1.5, 1.5, dim)
            p = rng.uniform(-1.5, 1.5, dim)
            lhs = average_numeric(v, (x, p), nodes)
            rhs = ave.evaluate(x, p).real
            worst = max(worst, abs(lhs - rhs))
    out.append(_check("poly-vs-trapezoid", worst <= 1e-12,
                      f"max |closed form - quadrature| = {worst:.3e}"))

    odd_ok = True
    for deg in (1, 3, 5, 7):
        v = Potential(1, {(deg,): rng.uniform(0.5, 1.5)})
        odd_ok &= average_poly(v).is_zero()
    v2 = Potential(2, {(1, 2): 1.0, (3, 0): -0.7})
    odd_ok &= average_poly(v2).is_zero()
    out.append(_check("odd-average-vanishes", odd_ok, "exact zero maps"))

    h_ok = True
    worst_h = 0.0
    for i in range(8):
        dim = 1 + (i % 2)
        v = _random_potential(rng, dim, 8)
        h0 = PhasePolynomial.oscillator_energy(dim)
        br = poisson_bracket(h0, average_poly(v))
        worst_h = max(worst_h, br.max_abs_coeff())
        h_ok &= br.is_zero(1e-11)
    out.append(_check("average-flow-invariant", h_ok,
                      f"max |{{H0, V^ave}}| coefficient = {worst_h:.3e}"))

    worst_w = 0.0
    for i in range(10):
        dim = 1 + (i % 2)
        v = _random_potential(rng, dim, 4)
        res = transport_symbols(v.to_phase_polynomial(), order=2)
        diff = res.w[2] - delta_average(v)
        worst_w = max(worst_w, diff.max_abs_coeff())
    out.append(_check("transport-w2-equals-delta", worst_w <= 1e-12,
                      f"max coefficient gap = {worst_w:.3e}"))
    return out


def appendix_suite(params: dict) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(params.get("seed", 7))
    out = []

    ok = True
    for dim in (1, 2):
        h0 = PhasePolynomial.oscillator_energy(dim)
        u0 = ExpTimePoly.propagator(dim)
        b2 = higher_bracket(h0, u0, 2) * ((-0.5j) ** 2)
        expected = ExpTimePoly(dim, {2: h0 * 0.25,
                                     1: PhasePolynomial.constant(dim, -0.25j * dim)})
        ok &= b2.isclose(expected, 1e-13)
    out.append(_check("moyal2-of-propagator", ok,
                      "B2(H0, e^{itH0}) = (t^2 H0 - i n t)/4 * e^{itH0}"))

    ode_ok = True
    worst = 0.0
    for dim in (1, 2):
        for _ in range(3):
            v = _random_potential(rng, dim, 2).to_phase_polynomial()
            s2 = v + average_poly(Potential(dim, {a: c.real for (a, b), c
                                                  in v.terms.items()}))
            h0 = PhasePolynomial.oscillator_energy(dim)
            u0 = ExpTimePoly.propagator(dim)
            u2 = ExpTimePoly(dim, {3: h0 * (1j / 12.0),
                                   2: PhasePolynomial.constant(dim, dim / 8.0),
                                   1: s2 * 1j})
            lhs = u2.dt() * (-1j)
            rhs = (higher_bracket(h0, u0, 2) * ((-0.5j) ** 2)) \
                + (u2 * h0) + (u0 * s2)
            diff = lhs - rhs
            worst = max(worst, diff.max_abs_coeff())
            ode_ok &= diff.isclose(ExpTimePoly(dim), 1e-12)
    out.append(_check("propagator-second-symbol-ode", ode_ok,
                      f"max ODE residual coefficient = {worst:.3e}"))

    lemma_ok = True
    worst_l = 0.0
    for l in range(0, 4):
        w0 = _random_potential(rng, 1, 2).to_phase_polynomial() \
            + PhasePolynomial.p(0, 1) * rng.uniform(-1, 1)
        w2 = _random_potential(rng, 1, 2).to_phase_polynomial()
        lead, corr = moyal_power_expansion(w0, w2, l)
        series = [w0, PhasePolynomial.zero(1), w2]
        brute = star_power_series(series, l + 1, 2)
        d0 = (brute[0] - lead).max_abs_coeff()
        d1 = brute[1].max_abs_coeff()
        d2 = (brute[2] - corr).max_abs_coeff()
        worst_l = max(worst_l, d0, d1, d2)
        lemma_ok &= max(d0, d1, d2) <= 1e-12
    out.append(_check("moyal-power-expansion", lemma_ok,
                      f"max gap to brute-force star powers = {worst_l:.3e}"))
    return out


def br_laws(params: dict) -> list[tuple[str, bool, str]]:
    out = []
    # diagonal action against an independent Fourier-integral quadrature
    worst = 0.0
    nodes = 4096
    thetas = 2.0 * math.pi * np.arange(nodes) / nodes
    for k in range(0, 11):
        cosk = np.cos(thetas) ** (2 * k)
        for r in range(-10, 11):
            numeric = float(np.mean(cosk * np.cos(2 * r * thetas)))
            worst = max(worst, abs(numeric - gamma_coeff(k, r)))
    out.append(_check("diagonal-action-exact", worst <= 1e-12,
                      f"max |gamma - Fourier quadrature| = {worst:.3e}"))

    tensor_ok = True
    worst_t = 0.0
    for k in range(0, 7):
        for l in range(0, 7):
            v = Potential(2, {(2 * k, 2 * l): 1.0})
            comp = r_n_decompose(v)
            for r in range(-max(k, l) - 1, max(k, l) + 2):
                got = comp.component(r).terms.get(((2 * k, 2 * l), (0, 0)), 0j)
                want = gamma_coeff(k, r) * gamma_coeff(l, r) \
                    if (abs(r) <= k and abs(r) <= l) else 0.0
                worst_t = max(worst_t, abs(got - want))
    tensor_ok = worst_t <= 1e-12
    out.append(_check("tensor-action-exact", tensor_ok,
                      f"max |A_r - gamma x gamma| = {worst_t:.3e}"))

    vals = [gamma_coeff(k, 0) * math.sqrt(math.pi * k) for k in range(4, 41)]
    mono = all(vals[i + 1] > vals[i] for i in range(len(vals) - 1))
    gap_ok = all(abs(1.0 - v) <= 1.0 / (4 * (k + 4))
                 for k, v in enumerate(vals))
    out.append(_check("asymptotic-gap", mono and gap_ok,
                      f"gamma*sqrt(pi k) in [{vals[0]:.5f}, {vals[-1]:.5f}], "
                      "increasing with gap <= 1/(4k)"))

    rng = np.random.default_rng(params.get("seed", 11))
    worst_rt = 0.0
    for _ in range(6):
        terms = {}
        for i in range(0, 5):
            for j in range(0, 5 - i):
                terms[((2 * i, 2 * j), (0, 0))] = rng.uniform(-1, 1)
        g = PhasePolynomial(2, terms)
        comp = r_n_decompose(Potential(2, {(a[0], a[1]): c.real
                                           for (a, b), c in g.terms.items()}))
        back = a0_invert(comp.component(0))
        diff = back - g
        worst_rt = max(worst_rt, diff.max_abs_coeff())
    out.append(_check("a0-round-trip", worst_rt <= 1e-12,
                      f"max round-trip gap = {worst_rt:.3e}"))
    return out


AUDIT_SUITES = {
    "linear-anchor": linear_anchor,
    "averaging-identities": averaging_identities,
    "appendix": appendix_suite,
    "br-laws": br_laws,
}


def run_audit_suite(name: str, params: dict) -> list[tuple[str, bool, str]]:
    if name not in AUDIT_SUITES:
        raise ValueError(f"unknown audit suite {name!r}")
    return AUDIT_SUITES[name](params)
