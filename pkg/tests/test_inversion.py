import math

import numpy as np
import pytest

from parisian.errors import ConfigError, NumericalError
from parisian.inversion import InverterConfig, euler_nodes, laplace_invert, resolution

U_GRID = np.linspace(0.05, 2.0, 40)


def heat_pair(alpha):
    def transform(z):
        s = np.sqrt(2 * z)
        return np.exp(-alpha * s) / s

    def density(u):
        return math.exp(-alpha * alpha / (2 * u)) / math.sqrt(2 * math.pi * u)

    return transform, density


CORPUS = {
    "constant": (lambda z: 1 / z, lambda u: 1.0),
    "ramp": (lambda z: 1 / z**2, lambda u: u),
    "heat alpha=0.5": heat_pair(0.5),
    "heat alpha=1": heat_pair(1.0),
}


def worst_relative_error(pair, config):
    transform, exact = pair
    return max(abs(laplace_invert(transform, u, config) - exact(u)) / abs(exact(u)) for u in U_GRID)


@pytest.mark.parametrize("name", list(CORPUS))
def test_corpus_round_trip(name):
    assert worst_relative_error(CORPUS[name], InverterConfig()) <= 1e-6


def test_constant_pair():
    assert laplace_invert(lambda z: 1 / z, 0.7) == pytest.approx(1.0, abs=1e-8)


def test_ramp_pair():
    assert laplace_invert(lambda z: 1 / z**2, 2.0) == pytest.approx(2.0, abs=1e-8)


def test_heat_pair_value():
    transform, _ = heat_pair(1.0)
    expected = math.exp(-1.0) / math.sqrt(math.pi)  # e^{-1}/sqrt(2 pi 0.5)
    assert laplace_invert(transform, 0.5) == pytest.approx(expected, rel=1e-8)
    assert expected == pytest.approx(0.20755, abs=1e-5)


@pytest.mark.parametrize(
    "transform, exact",
    [(lambda z: 1 / z, lambda u: 1.0), (lambda z: 1 / z**2, lambda u: u),
     (lambda z: 1 / (z + 1), lambda u: math.exp(-u))],
)
def test_methods_agree_on_smooth_pairs(transform, exact):
    euler = InverterConfig()
    with pytest.warns(RuntimeWarning):
        # 16 terms is the most accurate even count in double precision on these pairs.
        stehfest = InverterConfig("gaver-stehfest", 16)
    for u in (0.1, 0.5, 1.0, 2.0):
        assert laplace_invert(transform, u, euler) == pytest.approx(
            laplace_invert(transform, u, stehfest), abs=1e-5 * max(1.0, exact(u))
        )


@pytest.mark.parametrize("name", list(CORPUS))
def test_more_terms_do_not_increase_error(name):
    # Below ~1e-9 the error is set by round-off in the contour sum, not by the
    # number of terms, so that floor is allowed as slack.
    errors = [worst_relative_error(CORPUS[name], InverterConfig(terms=t)) for t in range(20, 61, 10)]
    for low, high in zip(errors, errors[1:]):
        assert high <= low + 1e-9


def test_batched_inversion():
    a = np.array([0.5, 1.0])

    def transform(z):
        s = np.sqrt(2 * z)
        return np.exp(-np.outer(a, s)) / s

    out = laplace_invert(transform, 0.5)
    assert out.shape == (2,)
    assert out[1] == pytest.approx(heat_pair(1.0)[1](0.5), rel=1e-8)


@pytest.mark.parametrize("terms", [20, 40, 60])
def test_jump_at_inversion_time_is_flagged(terms):
    # Unit step at u = 1: the series rings and the partial sums do not settle.
    with pytest.raises(NumericalError) as info:
        laplace_invert(lambda z: np.exp(-z) / z, 1.0, InverterConfig(terms=terms))
    assert info.value.estimate.shape == (terms,)
    assert info.value.achieved > 0


def test_non_finite_transform_raises():
    with pytest.raises(NumericalError):
        laplace_invert(lambda z: np.full(z.shape, np.nan), 1.0)


def test_nodes_follow_contour_shift():
    cfg = InverterConfig(terms=20, precision_target=1e-8)
    nodes = euler_nodes(0.5, cfg)
    assert nodes.size == 20
    assert np.allclose(nodes.real, (math.log(1e8) + 4) / 1.0)
    assert resolution(1.0, cfg) == pytest.approx(0.05)


@pytest.mark.parametrize(
    "kw",
    [dict(terms=10), dict(terms=61), dict(method="gaver-stehfest", terms=13),
     dict(method="gaver-stehfest", terms=20), dict(method="talbot"), dict(precision_target=0.0)],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        InverterConfig(**kw)


def test_stehfest_warns_above_fourteen_terms():
    with pytest.warns(RuntimeWarning):
        InverterConfig("gaver-stehfest", 16)


def test_inversion_time_must_be_positive():
    with pytest.raises(ConfigError):
        laplace_invert(lambda z: 1 / z, 0.0)
