import math

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parisian import pricing
from parisian.errors import DomainError, NumericalError
from parisian.model import MarketParams, ParisianContract
from parisian.pricing import (
    NumericsConfig,
    hb_density,
    paris_down_in_call,
    paris_down_out_call,
    vanilla_call,
)
from parisian.transforms import ExcursionSpec

MARKET = MarketParams(100.0, 0.05, 0.0, 0.2)
REFERENCE = ParisianContract(100.0, 95.0, 0.05, 1.0)


def bs_oracle(s, k, r, q, vol, tau):
    """Black-Scholes call in 30-digit arithmetic."""
    mp.mp.dps = 30
    s, k, r, q, vol, tau = map(mp.mpf, (s, k, r, q, vol, tau))
    d1 = (mp.log(s / k) + (r - q + vol**2 / 2) * tau) / (vol * mp.sqrt(tau))
    d2 = d1 - vol * mp.sqrt(tau)
    return float(s * mp.exp(-q * tau) * mp.ncdf(d1) - k * mp.exp(-r * tau) * mp.ncdf(d2))


def test_vanilla_reference_value():
    value = vanilla_call(MARKET, 100.0, 1.0)
    assert value == pytest.approx(bs_oracle(100, 100, 0.05, 0, 0.2, 1), rel=1e-13)
    assert value == pytest.approx(10.4506, abs=1e-4)


@given(st.floats(50, 150), st.floats(50, 150), st.floats(0.001, 0.1), st.floats(0, 0.08),
       st.floats(0.05, 0.8), st.floats(0.05, 3))
def test_vanilla_against_high_precision(s, k, r, q, vol, tau):
    value = vanilla_call(MarketParams(s, r, q, vol), k, tau)
    assert value == pytest.approx(bs_oracle(s, k, r, q, vol, tau), rel=1e-10, abs=1e-11)


def test_vanilla_zero_strike_is_forward():
    m = MarketParams(100.0, 0.05, 0.03, 0.2)
    assert vanilla_call(m, 1e-300, 2.0) == pytest.approx(100 * math.exp(-0.06), rel=1e-14)


def test_vanilla_zero_volatility_out_of_the_money():
    assert vanilla_call(MarketParams(100.0, 0.05, 0.0, 1e-6), 120.0, 1.0) < 1e-300


def test_vanilla_needs_positive_tau():
    with pytest.raises(DomainError):
        vanilla_call(MARKET, 100.0, 0.0)


def test_no_knock_in_before_window():
    c = ParisianContract(100.0, 95.0, 0.1, 0.05)
    result = paris_down_in_call(MARKET, c)
    assert result.value == 0.0
    assert result.method == "short-circuit"
    out = paris_down_out_call(MARKET, c)
    assert out.value == vanilla_call(MARKET, 100.0, 0.05)


def test_no_knock_in_before_remaining_requirement():
    m = MarketParams(90.0, 0.05, 0.0, 0.2)
    c = ParisianContract(100.0, 95.0, 0.1, 0.05, elapsed_age=0.02)
    assert paris_down_in_call(m, c).value == 0.0


def test_zero_barrier():
    c = ParisianContract(100.0, 0.0, 0.05, 1.0)
    assert paris_down_in_call(MARKET, c).value == 0.0
    assert paris_down_out_call(MARKET, c).value == vanilla_call(MARKET, 100.0, 1.0)


@pytest.mark.parametrize("tau", [0.1, 0.1 + 0.001, 0.1 - 0.001])
def test_maturity_at_threshold_is_rejected(tau):
    with pytest.raises(DomainError, match="resolution"):
        paris_down_in_call(MARKET, ParisianContract(100.0, 95.0, 0.1, tau))


def test_parity():
    in_ = paris_down_in_call(MARKET, REFERENCE)
    out = paris_down_out_call(MARKET, REFERENCE)
    assert in_.value + out.value == pytest.approx(vanilla_call(MARKET, 100.0, 1.0), rel=1e-15)
    assert out.diagnostics["down_in"] == in_.value


def test_diagnostics_recorded():
    result = paris_down_in_call(MARKET, REFERENCE)
    d = result.diagnostics
    assert d["threshold"] == 0.05
    assert d["inverter"] == {"method": "euler-summation", "terms": 40, "precision_target": 1e-8}
    assert d["inversions"] > 0 and d["negative_mass"] == 0.0
    lo, hi = d["truncation"]
    assert lo == pytest.approx(0.0) and hi > 5
    assert 0 < d["tail_bound"] <= 1e-5
    assert result.method == "laplace-euler-summation"


def test_reference_price_is_stable_across_numerics():
    base = paris_down_in_call(MARKET, REFERENCE).value
    from parisian.inversion import InverterConfig

    tight = NumericsConfig(inverter=InverterConfig(terms=60, precision_target=1e-10), price_rtol=1e-10)
    assert paris_down_in_call(MARKET, REFERENCE, tight).value == pytest.approx(base, rel=1e-7)
    stehfest = NumericsConfig(inverter=InverterConfig("gaver-stehfest", 14))
    assert paris_down_in_call(MARKET, REFERENCE, stehfest).value == pytest.approx(base, rel=1e-3)


def test_unreachable_barrier_from_below_gives_vanilla():
    # Barrier far above the spot: the price stays below it for the whole
    # remaining window almost surely, so knock-in happens at d.
    m = MarketParams(100.0, 0.05, 0.01, 0.2)
    c = ParisianContract(100.0, 300.0, 0.05, 1.0, elapsed_age=0.01)
    assert paris_down_in_call(m, c).value == pytest.approx(vanilla_call(m, 100.0, 1.0), rel=1e-7)


@pytest.mark.parametrize("y", [4.0, 5.0, 5.3])
def test_far_barrier_density_tail_matches_heat_convolution(y):
    # Contour values of the transform are ~1e-11 here, so the inner integrals
    # must be accurate relative to that size, not to an absolute 1e-10.
    from scipy import integrate as sp_integrate

    from parisian.transforms import reflected_density

    b, window, d, u = math.log(3.0) / 0.2, 0.05, 0.04, 1.0
    v = u - d
    expected, _ = sp_integrate.quad(
        lambda x: reflected_density(b, d, x) * math.exp(-(x - y) ** 2 / (2 * v)) / math.sqrt(2 * math.pi * v),
        -3.0, b, epsabs=1e-16, epsrel=1e-12, limit=400,
    )
    value = hb_density(ExcursionSpec(b, window, d), u, y)
    assert value == pytest.approx(expected, rel=1e-5, abs=1e-10)


def test_remote_barrier_from_above_gives_nothing():
    c = ParisianContract(100.0, 20.0, 0.05, 1.0)
    assert paris_down_in_call(MARKET, c).value < 1e-12


@pytest.mark.parametrize("lam", [0.5, 3.0])
def test_homogeneous_in_currency(lam):
    m = MarketParams(93.0 * lam, 0.05, 0.01, 0.25)
    c = ParisianContract(100.0 * lam, 95.0 * lam, 0.05, 0.5, elapsed_age=0.02)
    base = paris_down_in_call(MarketParams(93.0, 0.05, 0.01, 0.25),
                              ParisianContract(100.0, 95.0, 0.05, 0.5, elapsed_age=0.02)).value
    assert paris_down_in_call(m, c).value == pytest.approx(lam * base, rel=1e-7)


def test_monotone_in_elapsed_age():
    m = MarketParams(93.0, 0.05, 0.0, 0.2)
    values = [paris_down_in_call(m, ParisianContract(100.0, 95.0, 0.05, 1.0, e)).value
              for e in (0.0, 0.01, 0.02, 0.04)]
    assert values == sorted(values)


def test_negative_density_mass_fails(monkeypatch):
    monkeypatch.setattr(pricing, "_invert_density", lambda spec, y, u, numerics: -1.0)
    with pytest.raises(NumericalError, match="negative mass"):
        paris_down_in_call(MARKET, REFERENCE)


def test_density_zero_below_threshold():
    spec = ExcursionSpec(-0.2, 0.1)
    assert list(hb_density(spec, 0.05, [-0.5, 0.0, 0.5])) == [0.0, 0.0, 0.0]


def test_density_scalar_and_array():
    spec = ExcursionSpec(0.3, 0.1, 0.04)
    arr = hb_density(spec, 0.5, [0.1])
    assert hb_density(spec, 0.5, 0.1) == pytest.approx(arr[0])
