import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermoprobe.bath import (
    BathSpec,
    SpectralDensity,
    bose_occupation,
    gamma_rate,
    half_fourier,
    lamb_shift_s,
    ohmic_j,
    zero_temperature_shift,
)
from thermoprobe.validation import detailed_balance_error

SD = SpectralDensity()
mp.mp.dps = 30


def mp_j(x, wc=20):
    x = mp.mpf(x)
    return x * wc**2 / (wc**2 + x**2)


def mp_n(x, beta):
    return 1 / (mp.exp(mp.mpf(beta) * x) - 1)


def mp_gamma(w, beta):
    if w > 0:
        return 2 * mp.pi * mp_j(w) * (mp_n(w, beta) + 1)
    return 2 * mp.pi * mp_j(-w) * mp_n(-w, beta)


def mp_lamb_shift(w, beta, wc=20):
    """P int_0^inf J(x) [(n+1)/(w - x) + n/(w + x)] dx with the pole subtracted
    over [0, 2 x0], where the principal value of 1/(x0 - x) vanishes."""
    w = mp.mpf(w)
    x0 = abs(w)
    if w > 0:
        def g(x):
            return mp_j(x, wc) * (mp_n(x, beta) + 1)

        def regular(x):
            return mp_j(x, wc) * mp_n(x, beta) / (w + x)
    else:
        def g(x):
            return -mp_j(x, wc) * mp_n(x, beta)

        def regular(x):
            return mp_j(x, wc) * (mp_n(x, beta) + 1) / (w - x)
    g0 = g(x0)
    near = mp.quad(lambda x: (g(x) - g0) / (x0 - x), [0, x0, 2 * x0])
    far = mp.quad(lambda x: g(x) / (x0 - x), [2 * x0, wc, 10 * wc, mp.inf])
    reg = mp.quad(regular, [0, x0, wc, 10 * wc, mp.inf])
    return near + far + reg


@pytest.mark.parametrize("w", [0.01, 0.5, 1.0, 3.0, 20.0, 100.0])
def test_ohmic_density_matches_mpmath(w):
    assert ohmic_j(w, SD) == pytest.approx(float(mp_j(w)), rel=1e-14)


@pytest.mark.parametrize("beta", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("w", [-2.0, -1.0, -0.01, 0.01, 0.5, 1.0, 2.0])
def test_decay_rate_matches_mpmath(w, beta):
    assert gamma_rate(w, beta, SD) == pytest.approx(float(mp_gamma(mp.mpf(w), beta)), rel=1e-12)


@pytest.mark.parametrize("beta", [0.1, 1.0, 8.0])
def test_decay_rate_zero_frequency_limit(beta):
    assert gamma_rate(0.0, beta, SD) == pytest.approx(2 * math.pi / beta, rel=1e-14)
    assert gamma_rate(1e-7, beta, SD) == pytest.approx(2 * math.pi / beta, rel=1e-6)
    assert gamma_rate(-1e-7, beta, SD) == pytest.approx(2 * math.pi / beta, rel=1e-6)


@given(st.floats(1e-3, 8.0), st.floats(0.05, 10.0))
def test_detailed_balance(w, beta):
    up, down = gamma_rate(w, beta, SD), gamma_rate(-w, beta, SD)
    assert down == pytest.approx(math.exp(-beta * w) * up, rel=1e-12)


def test_detailed_balance_check_catches_perturbed_rates():
    assert detailed_balance_error() <= 1e-12

    def perturbed(w, beta, sd):
        r = gamma_rate(w, beta, sd)
        return 1.01 * r if w < 0 else r

    assert detailed_balance_error(perturbed) > 1e-3


def test_bose_occupation():
    assert bose_occupation(1.0, 1.0) == pytest.approx(1 / math.expm1(1.0))
    assert bose_occupation(1.0, math.inf) == 0.0
    with pytest.raises(ValueError):
        bose_occupation(0.0, 1.0)


@pytest.mark.parametrize("beta", [0.1, 1.0, 5.0])
@pytest.mark.parametrize("w", [-1.5, -0.5, -0.01, 0.01, 0.5, 0.99, 1.0, 2.0])
def test_lamb_shift_matches_mpmath_principal_value(w, beta):
    assert lamb_shift_s(w, beta, SD) == pytest.approx(float(mp_lamb_shift(w, beta)), rel=1e-6)


def test_lamb_shift_zero_frequency():
    for beta in (0.1, 1.0, 10.0):
        assert lamb_shift_s(0.0, beta, SD) == pytest.approx(-math.pi * 20 / 2, rel=1e-9)


@pytest.mark.parametrize("w", [-1.0, 0.3, 1.0, 2.5])
def test_lamb_shift_zero_temperature_closed_form(w):
    assert lamb_shift_s(w, 1e4, SD) == pytest.approx(zero_temperature_shift(w, SD), rel=1e-7)


def test_lamb_shift_continuous_through_zero():
    s0 = lamb_shift_s(0.0, 1.0, SD)
    assert lamb_shift_s(1e-4, 1.0, SD) == pytest.approx(s0, rel=1e-3)
    assert lamb_shift_s(-1e-4, 1.0, SD) == pytest.approx(s0, rel=1e-3)


def test_half_fourier_pair():
    r = half_fourier(1.0, 1.0, SD)
    assert r.gamma == gamma_rate(1.0, 1.0, SD)
    assert r.complex == pytest.approx(0.5 * r.gamma + 1j * r.s)
    assert half_fourier(1, 1, SD) is r


def test_bath_spec_validation():
    with pytest.raises(ValueError):
        BathSpec(beta=0.0)
    with pytest.raises(ValueError):
        BathSpec(beta=1.0, mu_x=-0.1)
    with pytest.raises(ValueError):
        SpectralDensity(cutoff=-1.0)
    with pytest.warns(UserWarning, match="weak-coupling"):
        BathSpec(beta=1.0, mu_x=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        BathSpec(beta=1.0, mu_x=0.01)


def test_rates_vectorise_consistently():
    ws = np.linspace(-3, 3, 13)
    vals = [gamma_rate(float(w), 1.0, SD) for w in ws]
    assert all(v > 0 for v in vals)
    assert np.all(np.diff(vals[:6]) > 0)
