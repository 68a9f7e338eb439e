import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from parisian.errors import DomainError, RangeError
from parisian.special import (
    erf,
    fp_tail_transform,
    psi_scaled,
    erfc,
    first_passage_density,
    normal_cdf,
    psi,
    survival_probability,
    truncated_fp_transform,
)

mp.mp.dps = 30


def psi_by_quadrature(z):
    z = mp.mpc(z)
    return complex(mp.quad(lambda x: x * mp.exp(-x * x / 2 + z * x), [0, 10, 40, mp.inf]))


def truncated_fp_oracle(b, d, z):
    """Closed form of int_0^d e^{-zw} mu_b(dw) (shifted complementary error functions)."""
    b, d, z = mp.mpf(b), mp.mpf(d), mp.mpc(z)
    s = mp.sqrt(2 * z)
    c = b / mp.sqrt(2 * d)
    r = mp.sqrt(z * d)
    return complex((mp.exp(-b * s) * mp.erfc(c - r) + mp.exp(b * s) * mp.erfc(c + r)) / 2)


@pytest.mark.parametrize("z", [0, 0.5, -0.5, 1, -1, 2, -2, 1 + 1j, 1 - 1j, 3j])
def test_psi_matches_quadrature_of_its_definition(z):
    assert abs(psi(z) - psi_by_quadrature(z)) <= 1e-10 * abs(psi_by_quadrature(z))


def test_psi_at_zero_is_one():
    assert psi(0) == 1


def test_psi_at_one():
    # 30-digit quadrature of int_0^inf x exp(-x^2/2 + x) dx
    assert psi(1.0) == pytest.approx(4.47705181170369446692552065357, rel=1e-14)


def test_psi_vectorized():
    z = np.array([[0.5, 1 + 1j], [2.0, 3j]])
    out = psi(z)
    assert out.shape == (2, 2)
    assert out[0, 1] == pytest.approx(psi(1 + 1j))


def test_psi_overflow_is_a_range_error():
    with pytest.raises(RangeError):
        psi(40.0)


def test_psi_no_zero_on_right_half_plane_sample():
    x = np.linspace(0.01, 6, 40)
    zz = (x[:, None] + 1j * np.linspace(-6, 6, 41)[None, :]) * math.sqrt(0.2)
    assert np.min(np.abs(psi(np.sqrt(zz)))) > 0


@given(st.floats(-5, 5), st.floats(-5, 5))
def test_psi_reflection(x, y):
    z = complex(x, y)
    assert psi(z.conjugate()) == pytest.approx(psi(z).conjugate(), rel=1e-13, abs=1e-13)


@pytest.mark.parametrize("x", [-3.0, -0.7, 0.0, 0.3, 1.0, 2.5, 5.0])
def test_error_functions_against_high_precision(x):
    assert abs(erf(x) - float(mp.erf(x))) <= 1e-14
    assert abs(erfc(x) - float(mp.erfc(x))) <= 1e-14
    assert abs(normal_cdf(x) - float(mp.ncdf(x))) <= 1e-14
    assert erf(x) + erfc(x) == pytest.approx(1.0, abs=1e-15)


def test_error_function_values():
    assert erf(0.0) == 0.0 and erfc(0.0) == 1.0
    assert erf(1.0) == pytest.approx(0.8427007929497149, abs=1e-15)
    assert erf(-0.7) == -erf(0.7)


def test_first_passage_density_value():
    assert first_passage_density(1.0, 1.0) == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-15)


def test_first_passage_density_normalized():
    total, _ = sp_integrate.quad(lambda w: first_passage_density(0.7, w), 0, np.inf, epsabs=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_first_passage_density_vanishes_at_zero():
    assert first_passage_density(1.0, 1e-4) < 1e-300
    assert first_passage_density(1.0, 1e-3) < 1e-200


@pytest.mark.parametrize("b, w", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)])
def test_first_passage_density_domain(b, w):
    with pytest.raises(DomainError):
        first_passage_density(b, w)


@pytest.mark.parametrize("z", [0.0, 0.5, 1.0, 1 + 1j, 5 - 2j, 20.0, 3 + 40j])
@pytest.mark.parametrize("b, d", [(0.3, 0.04), (0.3, 0.1), (0.05, 0.5), (1.0, 0.2)])
def test_truncated_fp_transform_matches_closed_form(b, d, z):
    assert abs(truncated_fp_transform(b, d, z) - truncated_fp_oracle(b, d, z)) <= 1e-12


def test_truncated_fp_transform_at_zero_is_hitting_probability():
    assert truncated_fp_transform(0.3, 0.1, 0.0) == pytest.approx(erfc(0.3 / math.sqrt(0.2)), abs=1e-13)


def test_truncated_fp_transform_long_horizon_limit():
    assert abs(truncated_fp_transform(0.3, 50.0, 1.0) - math.exp(-0.3 * math.sqrt(2))) <= 1e-10


def test_truncated_fp_transform_short_horizon_vanishes():
    assert abs(truncated_fp_transform(0.3, 1e-4, 1.0)) < 1e-150


def test_truncated_fp_transform_vectorized_and_bounded():
    z = np.array([0.5, 1 + 1j, 4 - 3j])
    out = truncated_fp_transform(0.3, 0.04, z)
    assert out.shape == (3,)
    assert np.all(np.abs(out) <= erfc(0.3 / math.sqrt(0.08)) + 1e-15)


def test_truncated_fp_transform_rejects_left_half_plane():
    with pytest.raises(DomainError):
        truncated_fp_transform(0.3, 0.1, -1.0)


@given(st.floats(0.01, 2.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.0, 30.0))
def test_truncated_fp_transform_monotone_in_d(b, d1, d2, z):
    lo, hi = sorted((d1, d2))
    assert abs(truncated_fp_transform(b, lo, z)) <= abs(truncated_fp_transform(b, hi, z)) + 1e-13


def test_survival_probability_value():
    # erf(0.3 / sqrt(0.2)) to 30 digits
    assert survival_probability(0.3, 0.1) == pytest.approx(0.657218288852088576, abs=1e-15)


def test_survival_complements_hitting():
    for b, d in [(0.3, 0.1), (0.05, 2.0), (1.0, 0.01)]:
        total = survival_probability(b, d) + truncated_fp_transform(b, d, 0.0).real
        assert total == pytest.approx(1.0, abs=1e-12)


def test_survival_unreachable_barrier():
    assert survival_probability(10.0, 0.01) == 1.0


@pytest.mark.parametrize("z", [1e-9, 0.5, 1 + 1j, 5 - 2j, 20.0, 3 + 40j, 500 + 2000j])
@pytest.mark.parametrize("b, d", [(0.3, 0.04), (0.3, 0.1), (0.05, 0.5), (1.0, 0.2)])
def test_first_passage_transform_splits_at_d(b, d, z):
    # truncated part + shifted tail = full first-passage transform exp(-b sqrt(2z))
    total = truncated_fp_transform(b, d, z) + np.exp(-z * d) * fp_tail_transform(b, d, z)
    assert abs(total - np.exp(-b * np.sqrt(2 * z))) <= 1e-12


def test_first_passage_tail_at_zero_is_survival():
    assert fp_tail_transform(0.3, 0.1, 0.0).real == pytest.approx(survival_probability(0.3, 0.1), abs=1e-13)


def fp_tail_oracle(b, d, z):
    """e^{zd} (e^{-b s} - truncated part) in 120 digits, enough to absorb the cancellation."""
    with mp.workdps(120):
        b, d, z = mp.mpf(b), mp.mpf(d), mp.mpc(z)
        s = mp.sqrt(2 * z)
        c, r = b / mp.sqrt(2 * d), mp.sqrt(z * d)
        truncated = (mp.exp(-b * s) * mp.erfc(c - r) + mp.exp(b * s) * mp.erfc(c + r)) / 2
        return complex(mp.exp(z * d) * (mp.exp(-b * s) - truncated))


@pytest.mark.parametrize(
    "b, d, z",
    [(0.3, 0.04, 1.0), (0.3, 0.04, 11.7 + 30j), (5.49, 0.04, 11.7 + 3j), (5.49, 0.04, 11.7 - 300j),
     (2.0, 0.01, 0.1), (0.05, 0.5, 3 + 4j)],
)
def test_first_passage_tail_keeps_relative_accuracy(b, d, z):
    # Far barriers make the tail tiny on the inversion contour; it must stay
    # accurate relative to its own size, not to an absolute tolerance.
    expected = fp_tail_oracle(b, d, z)
    assert abs(fp_tail_transform(b, d, z) - expected) <= 1e-12 * abs(expected)


def test_first_passage_tail_no_overflow_for_extreme_ratio():
    value = fp_tail_transform(40.0, 0.01, 5.0 + 1e4j)
    assert np.isfinite(value) and abs(value) <= 1.0


@pytest.mark.parametrize("z", [0.5, 1 + 1j, 10 - 30j, 200 + 500j])
def test_psi_scaled_matches_psi(z):
    w = np.sqrt(2 * 0.1 * z)
    expected = complex(mp.exp(-mp.mpc(w) ** 2 / 2)) * psi_by_quadrature(w) if abs(w) < 6 else np.exp(-w * w / 2) * psi(w)
    assert psi_scaled(w) == pytest.approx(expected, rel=1e-12)


def test_psi_scaled_far_out_is_finite():
    w = np.sqrt(2 * 0.1 * (1e4 + 1.2e5j))
    value = psi_scaled(w)
    assert np.isfinite(value)
    # leading behaviour w sqrt(2 pi) once exp(-w^2/2) is negligible
    assert value == pytest.approx(w * math.sqrt(2 * math.pi), rel=1e-3)


def test_psi_scaled_sector():
    with pytest.raises(DomainError):
        psi_scaled(1j)
