import math

import numpy as np
import pytest

from oscbands.averaging import Potential, average_poly, delta_average
from oscbands.phasepoly import ExpPolySymbol, PhasePolynomial, random_phase_polynomial
from oscbands.symbolcalc import (duhamel, flow_pullback,
                                 higher_bracket, moyal_power_expansion,
                                 moyal_term, poisson_bracket, star_power_series,
                                 transport_symbols)
from oscbands.timesym import TimeSymbol, time_poisson_bracket

X = PhasePolynomial.x(0, 1)
P = PhasePolynomial.p(0, 1)
H0 = PhasePolynomial.oscillator_energy(1)


def test_poisson_canonical_pairs():
    assert poisson_bracket(X, P).isclose(PhasePolynomial.constant(1, 1.0))
    assert poisson_bracket(H0, H0).terms == {}
    assert poisson_bracket(X ** 2, P ** 2).isclose(X * P * 4.0)


def test_poisson_antisymmetry_and_jacobi():
    rng = np.random.default_rng(2)
    for _ in range(6):
        dim = int(rng.integers(1, 3))
        f = random_phase_polynomial(rng, dim, 3)
        g = random_phase_polynomial(rng, dim, 3)
        h = random_phase_polynomial(rng, dim, 3)
        assert (poisson_bracket(f, g) + poisson_bracket(g, f)).is_zero(1e-12)
        jac = (poisson_bracket(f, poisson_bracket(g, h))
               + poisson_bracket(g, poisson_bracket(h, f))
               + poisson_bracket(h, poisson_bracket(f, g)))
        assert jac.is_zero(1e-11 * max(1.0, jac.max_abs_coeff() * 0 + 1.0))


def test_higher_bracket_order_zero_is_product():
    rng = np.random.default_rng(4)
    f = random_phase_polynomial(rng, 2, 2)
    g = random_phase_polynomial(rng, 2, 2)
    assert higher_bracket(f, g, 0).isclose(f * g, 1e-13)


def test_higher_bracket_quadratic_vanishing():
    # H0 is quadratic, so every bracket of order >= 3 with it dies
    rng = np.random.default_rng(5)
    for dim in (1, 2):
        h = PhasePolynomial.oscillator_energy(dim)
        b = random_phase_polynomial(rng, dim, 5)
        for k in (3, 4, 5):
            assert higher_bracket(h, b, k).terms == {}


def test_higher_bracket_hand_value():
    # hand differentiation: only alpha=(2), beta=(0) contributes,
    # (1/2!) * (d_x^2 x^2) * (d_p^2 p^2) = 2
    val = higher_bracket(X ** 2, P ** 2, 2)
    assert val.isclose(PhasePolynomial.constant(1, 2.0))


def test_moyal_orientation():
    # B_0 is the plain product; B_1 antisymmetrizes to the commutator i*hbar
    assert moyal_term(X, P, 0).isclose(X * P)
    comm = moyal_term(X, P, 1) - moyal_term(P, X, 1)
    assert comm.isclose(PhasePolynomial.constant(1, 1j))


def test_moyal_exp_rates():
    e1 = ExpPolySymbol.pure(1, -0.5)
    e2 = ExpPolySymbol.pure(1, -0.25)
    with pytest.raises(ValueError):
        moyal_term(e1, e2, 1)
    same = moyal_term(e1, ExpPolySymbol.pure(1, -0.5), 0)
    assert same.rate == -1.0


def test_moyal2_against_exp_formula():
    # B2(H0, e^{tau H0}) = -(tau^2 H0 + n tau)/4 * e^{tau H0}
    for dim in (1, 2):
        h = PhasePolynomial.oscillator_energy(dim)
        for tau in (0.3, -0.8 + 0.2j):
            e = ExpPolySymbol.pure(dim, tau)
            got = moyal_term(h, e, 2)
            expect = ExpPolySymbol(
                h * (-0.25 * tau ** 2) + PhasePolynomial.constant(dim, -0.25 * dim * tau),
                tau)
            assert got.isclose(expect, 1e-13)


def test_flow_pullback_basics():
    fp = flow_pullback(X)
    for s in (0.0, 0.7, 2.0):
        val = fp.evaluate(s)
        expect = X * math.cos(s) + P * math.sin(s)
        assert val.isclose(expect, 1e-12)
    assert flow_pullback(H0).terms.keys() == {(0, 0)}
    # full period returns the symbol exactly (coefficient level)
    rng = np.random.default_rng(8)
    f = random_phase_polynomial(rng, 2, 4)
    assert flow_pullback(f).at_two_pi().isclose(f, 1e-12)
    assert flow_pullback(f).at_zero().isclose(f, 1e-12)


def test_flow_pullback_xsquared():
    fp = flow_pullback(X ** 2)
    for s in (0.3, 1.1):
        expect = (PhasePolynomial.constant(1, 0.0)
                  + (X ** 2 + P ** 2) * 0.5
                  + (X ** 2 - P ** 2) * (0.5 * math.cos(2 * s))
                  + X * P * math.sin(2 * s))
        assert fp.evaluate(s).isclose(expect, 1e-12)


def test_time_symbol_integration_exact():
    # int_0^t s e^{2is} ds against numeric quadrature
    ts = TimeSymbol(1, {(1, 2): PhasePolynomial.constant(1, 1.0)})
    anti = ts.integrate_from_zero()
    for t in (0.5, 1.7):
        ss = np.linspace(0, t, 20001)
        numeric = np.trapezoid(ss * np.exp(2j * ss), ss)
        got = anti.evaluate(t).terms[((0,), (0,))]
        assert abs(got - numeric) < 1e-7
    assert anti.at_zero().terms == {}


def test_time_symbol_dt_inverts_integration():
    rng = np.random.default_rng(9)
    ts = TimeSymbol(1, {(0, -1): random_phase_polynomial(rng, 1, 2),
                        (2, 0): random_phase_polynomial(rng, 1, 1),
                        (1, 3): random_phase_polynomial(rng, 1, 2)})
    assert ts.integrate_from_zero().dt().isclose(ts, 1e-12)


def test_duhamel_solves_transport_ode():
    # y = duhamel(g) solves ydot = -{H0, y} + g with y(0) = 0
    rng = np.random.default_rng(10)
    for dim in (1, 2):
        h = PhasePolynomial.oscillator_energy(dim)
        g = TimeSymbol(dim, {(0, 1): random_phase_polynomial(rng, dim, 2),
                             (1, 0): random_phase_polynomial(rng, dim, 3)})
        y = duhamel(g)
        resid = y.dt() + time_poisson_bracket(TimeSymbol.from_poly(h), y) - g
        assert resid.max_abs_coeff() < 1e-12
        assert y.at_zero().is_zero(1e-13)


def test_transport_linear_anchor():
    res = transport_symbols(Potential.from_x_power(1).to_phase_polynomial(), order=4)
    assert res.w[0].is_zero(1e-13)
    assert res.w[1].is_zero(1e-13)
    w2 = res.w[2].chop(1e-13)
    assert w2.isclose(PhasePolynomial.constant(1, -0.5), 1e-12)


def test_transport_quadratic_values():
    res = transport_symbols(Potential.from_x_power(2).to_phase_polynomial(), order=2)
    assert res.w[0].isclose(H0, 1e-12)
    expect_w2 = X ** 2 * 0.25 - P ** 2 * 0.75
    assert res.w[2].isclose(expect_w2, 1e-12)


def test_transport_identities_random():
    rng = np.random.default_rng(12)
    for _ in range(4):
        v = random_phase_polynomial(rng, 1, int(rng.integers(1, 4)))
        v = PhasePolynomial(1, {(a, b): c.real for (a, b), c in v.terms.items()
                                if sum(b) == 0})
        res = transport_symbols(v, order=3)
        # transport equation residuals in the pinned conventions
        for k in range(0, 4):
            source = TimeSymbol.zero(1)
            for l in range(k):
                from oscbands.symbolcalc import time_moyal_with_poly
                source = source + time_moyal_with_poly(res.r[k - 1 - l], v, l)
            if k == 0:
                source = TimeSymbol.from_poly(v)
            resid = (res.r[k].dt()
                     + time_poisson_bracket(TimeSymbol.from_poly(H0), res.r[k])
                     + source * 1j)
            assert resid.max_abs_coeff() < 1e-11, f"transport residual at order {k}"
        # r1 = r0^2/2 exactly
        assert res.r[1].isclose(res.r[0] * res.r[0] * 0.5, 1e-11)


def test_transport_w1_vanishes_higher_degree():
    rng = np.random.default_rng(13)
    for deg in (5, 6):
        v = random_phase_polynomial(rng, 1, deg)
        v = PhasePolynomial(1, {(a, b): c.real for (a, b), c in v.terms.items()
                                if sum(b) == 0})
        res = transport_symbols(v, order=1)
        scale = max(1.0, v.max_abs_coeff()) ** 2
        assert res.w[1].is_zero(1e-12 * scale)


def test_transport_odd_average_vanishes():
    v = Potential(1, {(3,): 0.7, (1,): -0.2}).to_phase_polynomial()
    res = transport_symbols(v, order=2)
    assert res.w[0].is_zero(1e-13)
    # the averaging route is exactly zero for odd potentials
    assert average_poly(Potential(1, {(3,): 0.7, (1,): -0.2})).terms == {}


def test_transport_w2_matches_delta_average():
    rng = np.random.default_rng(14)
    for dim in (1, 2):
        v = Potential(dim, {tuple(a): float(c) for a, c in
                            {(2,) if dim == 1 else (2, 0): 0.4,
                             (1,) if dim == 1 else (1, 2): -0.3}.items()})
        res = transport_symbols(v.to_phase_polynomial(), order=2)
        assert res.w[2].isclose(delta_average(v), 1e-12)


def test_transport_validations():
    with pytest.raises(ValueError):
        transport_symbols(P, order=2)           # depends on p
    with pytest.raises(ValueError):
        transport_symbols(X, order=99)          # beyond the order bound
    with pytest.raises(TypeError):
        transport_symbols(Potential.from_x_power(1), order=2)  # wrong type


def test_moyal_power_expansion_trivial():
    w0 = X ** 2 + P ** 2
    w2 = X * P
    lead, corr = moyal_power_expansion(w0, w2, 0)
    assert lead.isclose(w0) and corr.isclose(w2)
    const = PhasePolynomial.constant(1, 2.0)
    lead, corr = moyal_power_expansion(const, w2, 3)
    assert lead.isclose(PhasePolynomial.constant(1, 16.0))
    assert corr.isclose(w2 * 4.0 * 8.0)  # (l+1) w0^l w2, B2 kills constants


def test_moyal_power_expansion_brute_force():
    rng = np.random.default_rng(15)
    for l in range(4):
        w0 = random_phase_polynomial(rng, 1, 2)
        w2 = random_phase_polynomial(rng, 1, 2)
        lead, corr = moyal_power_expansion(w0, w2, l)
        brute = star_power_series([w0, PhasePolynomial.zero(1), w2], l + 1, 2)
        assert (brute[0] - lead).max_abs_coeff() < 1e-12
        assert brute[1].max_abs_coeff() < 1e-12
        assert (brute[2] - corr).max_abs_coeff() < 1e-12
