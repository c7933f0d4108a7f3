import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from loopspectra.cft import (KacParams, beta_from_n, central_charge,
                             extrapolate_invL2, extrapolate_power, find_Kc, fit_ceff, kac_exponent,
                             kac_grid, locate_peak, match_exponent)
from loopspectra.errors import (DegenerateSizes, InsufficientPoints, NoBracketedPeak,
                                NOutOfRange)

ISING = Fraction(4, 3)


def ising_delta(r, s):
    r, s = Fraction(r), Fraction(s)
    return float(((4 * r - 3 * s) ** 2 - 1) / 48)


@pytest.mark.parametrize("r,s,x", [
    ("1/2", 0, 1 / 8), (1, 0, 5 / 8), (1, 1, 1), ("3/2", 0, 35 / 24), ("3/2", "2/3", 13 / 8),
    (2, 0, 21 / 8), (2, "1/2", 87 / 32), (2, 1, 3), ("5/2", 0, 33 / 8), ("5/2", "2/5", 837 / 200),
])
def test_ising_jtl_exponents(r, s, x):
    assert kac_exponent(Fraction(r), Fraction(s), float(ISING))[2] == pytest.approx(x, abs=1e-14)


@given(st.fractions(min_value=-3, max_value=3, max_denominator=6),
       st.fractions(min_value=-3, max_value=3, max_denominator=6))
def test_ising_kac_closed_form(r, s):
    assert KacParams(4 / 3).Delta(r, s) == pytest.approx(ising_delta(r, s), abs=1e-13)


@given(st.floats(0.2, 3.8), st.fractions(-4, 4, max_denominator=5), st.fractions(-4, 4, max_denominator=5))
def test_kac_reflection_symmetry(beta2, r, s):
    kp = KacParams(beta2)
    assert kp.Delta(r, s) == pytest.approx(kp.Delta(-r, -s), abs=1e-12)


@given(st.floats(0.2, 3.8))
def test_delta_11_vanishes(beta2):
    assert abs(KacParams(beta2).Delta(1, 1)) < 1e-14


def test_central_charge_examples():
    assert central_charge(beta_from_n(1.0, "dilute")) == pytest.approx(0.5, abs=1e-14)
    assert beta_from_n(1.0, "dilute") == pytest.approx(4 / 3, abs=1e-14)
    assert central_charge(beta_from_n(1 / math.sqrt(2), "dilute")) == pytest.approx(0.357946, abs=1e-6)
    assert central_charge(beta_from_n(1 / math.sqrt(2), "dense")) == pytest.approx(-0.445833, abs=1e-6)


@pytest.mark.parametrize("branch", ["dilute", "dense"])
def test_beta_round_trip_grid(branch):
    for n in np.linspace(-1.99, 1.99, 200):
        b2 = beta_from_n(n, branch)
        assert KacParams(b2).n == pytest.approx(n, abs=1e-12)
        assert (1 <= b2 <= 2) if branch == "dilute" else (0 < b2 <= 1)


def test_beta_from_n_rejects_out_of_range():
    with pytest.raises(NOutOfRange):
        beta_from_n(2.5)


def test_fit_ceff_exact_inversion():
    f = [(L, 1 - math.pi / (6 * L * L)) for L in (8, 9, 10)]
    assert fit_ceff(f, "ThreePoint").value == pytest.approx(1.0, abs=1e-9)
    assert fit_ceff(f[1:], "TwoPoint").value == pytest.approx(1.0, abs=1e-9)


@given(st.floats(-1, 1), st.floats(0.1, 2), st.floats(-5, 5), st.integers(4, 20))
def test_three_point_fit_reproduces_inputs(finf, c, A, L0):
    f = [(L, finf - math.pi * c / (6 * L * L) + A / L ** 4) for L in (L0, L0 + 1, L0 + 2)]
    res = fit_ceff(f, "ThreePoint")
    assert res.value == pytest.approx(c, abs=1e-6)
    assert res.amplitude == pytest.approx(A, abs=1e-3 * max(1, abs(A)) * L0 ** 2)
    assert res.residual < 1e-12


def test_two_point_fit_is_biased_by_l4_term():
    f = [(L, 0.3 - math.pi * 0.5 / (6 * L * L) + 2.0 / L ** 4) for L in (6, 7, 8)]
    assert fit_ceff(f, "ThreePoint").value == pytest.approx(0.5, abs=1e-10)
    assert abs(fit_ceff(f[1:], "TwoPoint").value - 0.5) > 1e-3


def test_fit_ceff_errors():
    with pytest.raises(DegenerateSizes):
        fit_ceff([(8, 1.0), (8, 1.0), (9, 1.0)], "ThreePoint")
    with pytest.raises(InsufficientPoints):
        fit_ceff([(8, 1.0), (9, 1.0)], "ThreePoint")


def test_extrapolate_constant_and_linear():
    const = extrapolate_invL2([(L, 0.25) for L in range(4, 9)], 2)
    assert const.value == pytest.approx(0.25, abs=1e-13) and const.residual < 1e-13
    lin = extrapolate_invL2([(L, 0.125 + 3 / L ** 2) for L in range(4, 9)], 1)
    assert lin.value == pytest.approx(0.125, abs=1e-12)
    with pytest.raises(InsufficientPoints):
        extrapolate_invL2([(4, 1.0), (5, 1.0)], 2)


@given(st.floats(-1, 1), st.floats(-3, 3), st.floats(2.0, 7.0))
def test_power_extrapolation_recovers_limit(v, a, omega):
    series = [(L, v + a * L ** -omega) for L in (8, 9, 10, 11)]
    res = extrapolate_power(series)
    if abs(a) > 1e-3:
        assert res.value == pytest.approx(v, abs=1e-7)
        assert res.extra["omega"] == pytest.approx(omega, abs=1e-4)


def test_locate_peak_on_parabola():
    k, c, guess = locate_peak(lambda K: 1 - (K - 0.4123) ** 2, (0.3, 0.5), npoints=7)
    assert k == pytest.approx(0.4123, abs=1e-6)
    assert c == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(NoBracketedPeak):
        locate_peak(lambda K: K, (0.3, 0.5))


def test_find_kc_on_synthetic_free_energy():
    # c_eff(K) peaks at Kc(L) = 0.4 + 0.1/L^2 with height 0.5
    def free_energy(L, K):
        kc = 0.4 + 0.1 / L ** 2
        c = 0.5 - 3 * (K - kc) ** 2
        return math.pi * c / (6 * L * L) + 0.2
    res = find_Kc(free_energy, range(4, 10), (0.3, 0.5), mode="TwoPoint", npoints=9)
    assert res.kind == "KcPeak"
    assert abs(res.value - 0.4) < 2e-3
    assert res.extra["c"] == pytest.approx(0.5, abs=1e-3)


def test_kac_grid_and_matching():
    grid = kac_grid(3, 2)
    assert (Fraction(3, 2), Fraction(2, 3)) in grid
    (r, s), x = match_exponent(1.627, 4 / 3)
    assert x == pytest.approx(13 / 8)
    assert match_exponent(0.3, 4 / 3, window=0.01) is None
