"""Monte Carlo path oracle.

Two families of estimators, both independent of the transform formulas:

* price level: Euler log-space simulation of the risk-neutral SDE with the
  excursion clock of the contract (``simulate_knock_in``, ``mc_price``);
* Brownian level: driftless standard Brownian motion ``W`` started at 0 with
  the same clock against level ``b`` (``sample_exit``), from which
  ``E[exp(-z H)]``, the lemma integrand and the law of ``W(H)`` are estimated.

Clock rule on a grid of step ``h``: the clock starts at the elapsed age (or
0), grows by ``h`` over a step that ends below the barrier and resets to 0 when
a grid point is at or above it.  With ``bridge=True`` a step whose endpoints
are both below the barrier also resets with the Brownian-bridge probability
``exp(-2 (l - x0)(l - x1) / (sigma^2 h))`` of touching the barrier in between,
and a step that crosses downward starts the clock at ``h/2``.  The plain rule
misses touches between grid points and therefore knocks in too early; the
bridge rule removes that first-order bias.

Random numbers: paths are grouped in chunks of ``CHUNK`` paths, each chunk
drawing from its own PCG64 stream spawned from ``SeedSequence(seed)``.
Results depend only on ``(seed, config, inputs)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numba
import numpy as np

from .errors import ConfigError
from .model import MarketParams, ParisianContract, validate
from .special import normal_cdf
from .transforms import ExcursionSpec

__all__ = [
    "PathConfig",
    "McEstimate",
    "ExitSample",
    "simulate_knock_in",
    "mc_price",
    "mc_price_refinement",
    "sample_exit",
    "mc_exit_time_transform",
    "mc_hb_lemma_estimate",
    "mc_knock_in_probability",
    "one_touch_probability",
    "CHUNK",
]

CHUNK = 8192
# Excursions above b + SKIP_MARGIN * sqrt(h) are skipped with the exact passage law.
SKIP_MARGIN = 4.0


@dataclass(frozen=True)
class PathConfig:
    paths: int = 100_000
    steps_per_unit_time: int = 10_000
    seed: int = 20020101
    antithetic: bool = False
    bridge: bool = True

    def __post_init__(self):
        if self.paths < 100:
            raise ConfigError(f"mc.paths must be >= 100, got {self.paths}")
        if self.steps_per_unit_time < 100:
            raise ConfigError(
                f"mc.steps_per_unit_time must be >= 100, got {self.steps_per_unit_time}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("mc.seed must fit in 64 unsigned bits")
        if self.antithetic and self.paths % 2:
            raise ConfigError("antithetic sampling needs an even path count")

    @property
    def step(self) -> float:
        return 1.0 / self.steps_per_unit_time


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error (componentwise for complex means)."""

    mean: float | complex
    std_error: float
    paths: int
    seed: int
    std_error_imag: float = 0.0

    def z_score(self, value) -> tuple[float, float]:
        """(real, imaginary) z-scores of ``value`` against this estimate."""
        diff = complex(self.mean) - complex(value)
        zr = diff.real / self.std_error if self.std_error > 0 else (0.0 if diff.real == 0 else math.inf)
        if self.std_error_imag > 0:
            zi = diff.imag / self.std_error_imag
        else:
            zi = 0.0 if diff.imag == 0 else math.inf
        return zr, zi


def _estimate(values: np.ndarray, config: PathConfig) -> McEstimate:
    if config.antithetic:
        values = 0.5 * (values[0::2] + values[1::2])
    n = values.size
    mean = values.mean()
    se_re = float(values.real.std(ddof=1) / math.sqrt(n))
    se_im = float(values.imag.std(ddof=1) / math.sqrt(n)) if np.iscomplexobj(values) else 0.0
    mean = complex(mean) if np.iscomplexobj(values) else float(mean)
    return McEstimate(mean, se_re, config.paths, config.seed, se_im)


def _chunk_generators(config: PathConfig) -> Iterator[tuple[np.random.Generator, int]]:
    n_chunks = -(-config.paths // CHUNK)
    children = np.random.SeedSequence(config.seed).spawn(n_chunks)
    for i, child in enumerate(children):
        yield np.random.Generator(np.random.PCG64(child)), min(CHUNK, config.paths - i * CHUNK)


# -- compiled kernels --------------------------------------------------------

@numba.njit(cache=True)
def _clock_step(clock, x0, x1, level, var, rng, bridge, dt):
    """Advance the excursion clock over one step; returns the new clock."""
    if x1 >= level:
        return 0.0
    if x0 >= level:
        return 0.5 * dt if bridge else dt
    if bridge and rng.random() < math.exp(-2.0 * (level - x0) * (level - x1) / var):
        return 0.0
    return clock + dt


@numba.njit(cache=True)
def _exit_kernel(rng, n, b, window, clock0, h, horizon, bridge, antithetic, margin):
    hit_time = np.empty(n)
    position = np.empty(n)
    sq = math.sqrt(h)
    ceiling = b + margin * sq
    pair = 2 if antithetic else 1
    for p0 in range(0, n, pair):
        w = np.zeros(pair)
        t = np.zeros(pair)
        clock = np.full(pair, clock0)
        active = np.ones(pair, dtype=np.bool_)
        remaining = pair
        while remaining > 0:
            g = rng.standard_normal()
            for j in range(pair):
                if not active[j]:
                    continue
                if w[j] > ceiling:
                    # clock is 0 until the path returns to the ceiling: jump
                    # there with the exact first-passage time gap^2 / Z^2
                    gap = w[j] - ceiling
                    zz = rng.standard_normal()
                    t[j] += gap * gap / max(zz * zz, 1e-300)
                    w[j] = ceiling
                if t[j] >= horizon:
                    hit_time[p0 + j] = horizon
                    position[p0 + j] = w[j]
                    active[j] = False
                    remaining -= 1
                    continue
                step = sq * g if j == 0 else -sq * g
                w1 = w[j] + step
                c1 = _clock_step(clock[j], w[j], w1, b, h, rng, bridge, h)
                if c1 >= window:
                    theta = (window - clock[j]) / h
                    if theta < 0.0:
                        theta = 0.0
                    hit_time[p0 + j] = t[j] + theta * h
                    spread = math.sqrt(max(theta * (1.0 - theta), 0.0) * h)
                    position[p0 + j] = w[j] + theta * (w1 - w[j]) + spread * rng.standard_normal()
                    active[j] = False
                    remaining -= 1
                clock[j] = c1
                w[j] = w1
                t[j] += h
    return hit_time, position


@numba.njit(cache=True)
def _price_kernel(rng, n, x0, drift, sigma, level, window, clock0, dt, n_steps, stride, bridge, antithetic):
    """Simulate log-prices on the fine grid ``dt``; monitor the clock on the
    fine grid and, when ``stride == 2``, also on every second point.

    Returns (terminal log-price, knocked on fine grid, knocked on coarse grid).
    """
    terminal = np.empty(n)
    fine_in = np.zeros(n, dtype=np.bool_)
    coarse_in = np.zeros(n, dtype=np.bool_)
    sq = sigma * math.sqrt(dt)
    mu = drift * dt
    var_f = sigma * sigma * dt
    var_c = var_f * stride
    pair = 2 if antithetic else 1
    for p0 in range(0, n, pair):
        x = np.full(pair, x0)
        xc = np.full(pair, x0)
        cf = np.full(pair, clock0)
        cc = np.full(pair, clock0)
        kf = np.zeros(pair, dtype=np.bool_)
        kc = np.zeros(pair, dtype=np.bool_)
        for k in range(n_steps):
            g = rng.standard_normal()
            for j in range(pair):
                x1 = x[j] + mu + (sq * g if j == 0 else -sq * g)
                if not kf[j]:
                    cf[j] = _clock_step(cf[j], x[j], x1, level, var_f, rng, bridge, dt)
                    if cf[j] >= window - 1e-12 * window:
                        kf[j] = True
                if stride == 2 and (k % 2) == 1 and not kc[j]:
                    cc[j] = _clock_step(cc[j], xc[j], x1, level, var_c, rng, bridge, 2.0 * dt)
                    if cc[j] >= window - 1e-12 * window:
                        kc[j] = True
                if stride == 2 and (k % 2) == 1:
                    xc[j] = x1
                x[j] = x1
        for j in range(pair):
            terminal[p0 + j] = x[j]
            fine_in[p0 + j] = kf[j]
            coarse_in[p0 + j] = kc[j]
    return terminal, fine_in, coarse_in


# -- price level -------------------------------------------------------------

def _grid(tau: float, steps_per_unit_time: int) -> tuple[int, float]:
    n_steps = max(1, math.ceil(tau * steps_per_unit_time - 1e-9))
    return n_steps, tau / n_steps


def _price_setup(market: MarketParams, contract: ParisianContract):
    validate(market, contract)
    sigma = market.volatility
    drift = market.rate - market.dividend - 0.5 * sigma * sigma
    level = math.log(contract.barrier) if contract.barrier > 0 else -math.inf
    return math.log(market.spot), drift, sigma, level


def simulate_knock_in(
    market: MarketParams, contract: ParisianContract, config: PathConfig, _stride: int = 1
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(knocked_in, terminal_spot)`` arrays, one pair per chunk."""
    x0, drift, sigma, level = _price_setup(market, contract)
    n_steps, dt = _grid(contract.time_to_maturity, config.steps_per_unit_time)
    for rng, n in _chunk_generators(config):
        terminal, knocked, _ = _price_kernel(
            rng, n, x0, drift, sigma, level, contract.window, contract.elapsed_age,
            dt, n_steps, 1, config.bridge, config.antithetic,
        )
        yield knocked, np.exp(terminal)


def mc_price(market: MarketParams, contract: ParisianContract, config: PathConfig) -> McEstimate:
    """Discounted Parisian down-and-in call payoff, averaged over paths."""
    disc = math.exp(-market.rate * contract.time_to_maturity)
    values = []
    for knocked, spot_t in simulate_knock_in(market, contract, config):
        values.append(disc * np.maximum(spot_t - contract.strike, 0.0) * knocked)
    return _estimate(np.concatenate(values), config)


@dataclass(frozen=True)
class RefinementResult:
    """Coupled estimates at step ``h`` (coarse) and ``h/2`` (fine)."""

    coarse: McEstimate
    fine: McEstimate
    bias: float
    knock_in_coarse: float
    knock_in_fine: float


def mc_price_refinement(market: MarketParams, contract: ParisianContract, config: PathConfig) -> RefinementResult:
    """Step-refinement protocol: the same Brownian paths monitored at ``h`` and ``h/2``.

    ``config.steps_per_unit_time`` sets the coarse step ``h``; ``bias`` is
    ``|estimate(h) - estimate(h/2)|``.
    """
    x0, drift, sigma, level = _price_setup(market, contract)
    n_coarse, dt_c = _grid(contract.time_to_maturity, config.steps_per_unit_time)
    dt = 0.5 * dt_c
    disc = math.exp(-market.rate * contract.time_to_maturity)
    fine_vals, coarse_vals, kf_all, kc_all = [], [], [], []
    for rng, n in _chunk_generators(config):
        terminal, kf, kc = _price_kernel(
            rng, n, x0, drift, sigma, level, contract.window, contract.elapsed_age,
            dt, 2 * n_coarse, 2, config.bridge, config.antithetic,
        )
        payoff = disc * np.maximum(np.exp(terminal) - contract.strike, 0.0)
        fine_vals.append(payoff * kf)
        coarse_vals.append(payoff * kc)
        kf_all.append(kf)
        kc_all.append(kc)
    fine = _estimate(np.concatenate(fine_vals), config)
    coarse = _estimate(np.concatenate(coarse_vals), config)
    return RefinementResult(
        coarse,
        fine,
        abs(coarse.mean - fine.mean),
        float(np.concatenate(kc_all).mean()),
        float(np.concatenate(kf_all).mean()),
    )


def one_touch_probability(market: MarketParams, barrier: float, tau: float) -> float:
    """Risk-neutral probability that a price starting above ``barrier`` touches it by ``tau``."""
    sigma = market.volatility
    nu = market.rate - market.dividend - 0.5 * sigma * sigma
    a = math.log(barrier / market.spot)
    if a >= 0:
        return 1.0
    srt = sigma * math.sqrt(tau)
    return float(
        normal_cdf((a - nu * tau) / srt)
        + math.exp(2.0 * nu * a / (sigma * sigma)) * normal_cdf((a + nu * tau) / srt)
    )


# -- Brownian level ----------------------------------------------------------

@dataclass(frozen=True)
class ExitSample:
    """Simulated knock-in times ``H`` and positions ``W(H)``; ``H == horizon`` marks truncation."""

    hit_time: np.ndarray
    position: np.ndarray
    horizon: float
    config: PathConfig

    @property
    def truncated(self) -> np.ndarray:
        return self.hit_time >= self.horizon


def sample_exit(spec: ExcursionSpec, config: PathConfig, horizon: float) -> ExitSample:
    """Simulate ``(H, W(H))`` for driftless Brownian motion; the clock starts at ``D - d`` when ``b > 0``."""
    if not horizon > 0:
        raise ConfigError(f"horizon must be > 0, got {horizon}")
    clock0 = spec.window - spec.remaining if spec.b > 0 else 0.0
    times, positions = [], []
    for rng, n in _chunk_generators(config):
        t, x = _exit_kernel(rng, n, spec.b, spec.window, clock0, config.step, horizon,
                            config.bridge, config.antithetic, SKIP_MARGIN)
        times.append(t)
        positions.append(x)
    return ExitSample(np.concatenate(times), np.concatenate(positions), horizon, config)


def _check_horizon(z: complex, horizon: float) -> None:
    if z.real <= 0:
        raise ConfigError(f"need Re z > 0, got z={z}")
    if horizon * z.real < 20.0:
        raise ConfigError(
            f"horizon {horizon} too short for z={z}: need horizon * Re z >= 20 "
            "(truncation bias below 1e-8)"
        )


def _resolve_sample(spec, z, config, horizon, sample):
    if sample is None:
        horizon = horizon if horizon is not None else 40.0 / z.real
        _check_horizon(z, horizon)
        return sample_exit(spec, config, horizon)
    _check_horizon(z, sample.horizon)
    return sample


def mc_exit_time_transform(
    spec: ExcursionSpec, z, config: PathConfig, horizon: float | None = None, sample: ExitSample | None = None
) -> McEstimate:
    """Estimate ``E[exp(-z H)]``; truncated paths contribute ``exp(-z * horizon)``."""
    z = complex(z)
    sample = _resolve_sample(spec, z, config, horizon, sample)
    return _estimate(np.exp(-z * sample.hit_time), sample.config)


def mc_hb_lemma_estimate(
    spec: ExcursionSpec, y: float, z, config: PathConfig, horizon: float | None = None,
    sample: ExitSample | None = None,
) -> McEstimate:
    """Estimate ``E[exp(-z H) exp(-|W(H) - y| sqrt(2z)) / sqrt(2z)]``."""
    z = complex(z)
    sample = _resolve_sample(spec, z, config, horizon, sample)
    s = np.sqrt(2.0 * z)
    values = np.exp(-z * sample.hit_time - np.abs(sample.position - y) * s) / s
    return _estimate(values, sample.config)


def mc_knock_in_probability(sample: ExitSample, u: float) -> McEstimate:
    """Estimate ``P(H < u)`` from a sample whose horizon exceeds ``u``."""
    if u > sample.horizon:
        raise ConfigError(f"u={u} beyond the sample horizon {sample.horizon}")
    return _estimate((sample.hit_time < u).astype(float), sample.config)
