"""Prices: the valuation identity over the inverted Paris option density.

    C = exp(-(r + varpi^2/2) tau) * int_beta^inf exp(varpi x) (S e^{sigma x} - K) h_b(tau, x) dx

``h_b(tau, x)`` is obtained per quadrature node by numerically inverting its
Laplace transform at ``u = tau``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DomainError, NumericalError
from .inversion import InverterConfig, invert_pieces, resolution
from .model import MarketParams, ParisianContract, derive_params
from .quadrature import integrate
from .transforms import DEFAULT_QUAD_TOL, ExcursionSpec, hb_transform

__all__ = [
    "NumericsConfig",
    "PriceResult",
    "vanilla_call",
    "hb_density",
    "paris_down_in_call",
    "paris_down_out_call",
]


@dataclass(frozen=True)
class NumericsConfig:
    """Inversion settings plus the tolerances of the two quadrature levels.

    ``quad_tol`` is the relative tolerance of the inner (transform) integrals,
    ``price_rtol`` the relative tolerance of the outer payoff integral, and
    ``negative_mass_limit`` the largest tolerated mass of negative inverted
    density before a price is refused.
    """

    inverter: InverterConfig = field(default_factory=InverterConfig)
    quad_tol: float = DEFAULT_QUAD_TOL
    price_rtol: float = 1e-7
    negative_mass_limit: float = 1e-4


@dataclass(frozen=True)
class PriceResult:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)


def vanilla_call(market: MarketParams, strike: float, tau: float) -> float:
    """Black-Scholes call with continuous dividend yield."""
    if not tau > 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    s, r, q, vol = market.spot, market.rate, market.dividend, market.volatility
    if strike <= 0:
        return s * math.exp(-q * tau)
    srt = vol * math.sqrt(tau)
    d1 = (math.log(s / strike) + (r - q + 0.5 * vol * vol) * tau) / srt
    d2 = d1 - srt
    return float(s * math.exp(-q * tau) * ndtr(d1) - strike * math.exp(-r * tau) * ndtr(d2))


def _check_time(spec: ExcursionSpec, u: float, inverter: InverterConfig) -> None:
    gap = abs(u - spec.threshold)
    if gap < resolution(u, inverter):
        raise DomainError(
            f"time {u} is within the inverter resolution {resolution(u, inverter):.3g} of the "
            f"density threshold {spec.threshold}; the inverted density jumps there"
        )


def _invert_density(spec: ExcursionSpec, y: float, u: float, numerics: NumericsConfig) -> float:
    evaluator = hb_transform(spec, y, numerics.quad_tol)
    try:
        return float(invert_pieces(evaluator.shifted_pieces(), u, numerics.inverter))
    except NumericalError as exc:
        raise NumericalError(f"density inversion at y={y}, u={u}: {exc}", exc.estimate, exc.achieved) from exc


def hb_density(spec: ExcursionSpec, u: float, y, numerics: NumericsConfig | None = None):
    """Paris option density ``h_b(u, y)`` for each ``y`` (zero below the threshold)."""
    numerics = numerics or NumericsConfig()
    y_arr = np.atleast_1d(np.asarray(y, dtype=float))
    _check_time(spec, u, numerics.inverter)
    if u < spec.threshold:
        out = np.zeros(y_arr.shape)
    else:
        out = np.array([_invert_density(spec, float(v), u, numerics) for v in y_arr])
    return out if np.ndim(y) else float(out[0])


def _upper_cutoff(params, spot: float, discount: float, abs_tol: float) -> tuple[float, float]:
    """Smallest ``x`` past which the integrand tail is provably below ``abs_tol``.

    The knock-in position never exceeds ``b`` and the density is a heat kernel
    mixture over times ``<= tau``, so ``h_b(tau, y) <= phi_tau(y - b)`` once
    ``y - b >= sqrt(tau)``.  Hence the tail beyond ``x`` is at most
    ``discount S exp(k b + k^2 tau / 2) Phi(-(x - b - k tau)/sqrt(tau))`` with
    ``k = varpi + sigma``.
    """
    b, tau = params.b, params.tau
    k = params.varpi + params.sigma
    scale = discount * spot * math.exp(k * b + 0.5 * k * k * tau)
    rt = math.sqrt(tau)
    ratio = abs_tol / scale
    x = b + k * tau - rt * ndtri(ratio) if ratio < 0.5 else b + k * tau
    x = max(x, b + rt)
    bound = scale * float(ndtr(-(x - b - k * tau) / rt))
    return float(x), bound


@dataclass(frozen=True)
class _Coords:
    varpi: float
    sigma: float
    b: float
    beta: float
    tau: float
    window: float
    d: float


def paris_down_in_call(
    market: MarketParams, contract: ParisianContract, numerics: NumericsConfig | None = None
) -> PriceResult:
    """Parisian down-and-in call by numerical inversion of the density transform."""
    numerics = numerics or NumericsConfig()
    params = derive_params(market, contract)
    diagnostics: dict = {
        "inverter": {
            "method": numerics.inverter.method,
            "terms": numerics.inverter.terms,
            "precision_target": numerics.inverter.precision_target,
        },
        "quad_tol": numerics.quad_tol,
        "price_rtol": numerics.price_rtol,
    }
    if contract.barrier == 0:
        diagnostics["reason"] = "zero barrier: a positive price never goes below 0"
        return PriceResult(0.0, "short-circuit", diagnostics)

    spec = ExcursionSpec.from_derived(params)
    tau = params.tau
    diagnostics["threshold"] = spec.threshold
    _check_time(spec, tau, numerics.inverter)
    if tau < spec.threshold:
        diagnostics["reason"] = "maturity before the earliest possible knock-in"
        return PriceResult(0.0, "short-circuit", diagnostics)

    c = _Coords(params.varpi, market.volatility, params.b, params.beta, tau, params.window, params.d)
    discount = math.exp(-(market.rate + 0.5 * c.varpi**2) * tau)
    scale = market.spot * math.exp(-market.dividend * tau)
    abs_tol = max(numerics.quad_tol, numerics.price_rtol * scale)
    x_hi, tail_bound = _upper_cutoff(c, market.spot, discount, abs_tol)
    # Below b the knock-in position has Gaussian tails of variance <= D and
    # the heat kernel adds at most tau; 10 standard deviations leave < 1e-21.
    x_lo = max(c.beta, min(c.b, 0.0) - 10.0 * math.sqrt(tau + c.window))
    diagnostics.update(truncation=(x_lo, x_hi), tail_bound=tail_bound)

    started = time.perf_counter()
    nodes: list[tuple[float, float]] = []

    def integrand(x):
        out = np.empty(x.shape)
        for i, xi in enumerate(x):
            h = _invert_density(spec, float(xi), tau, numerics)
            nodes.append((float(xi), h))
            h = max(h, 0.0)
            out[i] = math.exp(c.varpi * xi) * (market.spot * math.exp(c.sigma * xi) - contract.strike) * h
        return out

    if x_hi <= x_lo:
        value, err, n_eval = 0.0, 0.0, 0
    else:
        splits = [p for p in (c.b, 0.0) if x_lo < p < x_hi]
        try:
            res = integrate(integrand, x_lo, x_hi, tol=abs_tol / discount, split_points=splits,
                            rtol=numerics.price_rtol, max_intervals=400)
        except NumericalError as exc:
            raise NumericalError(f"payoff integral failed: {exc}", exc.estimate, exc.achieved) from exc
        value, err, n_eval = discount * res.value, discount * res.error_estimate, res.evaluations

    negative_mass = 0.0
    if nodes:
        xs, hs = np.array(nodes).T
        order = np.argsort(xs)
        neg = np.maximum(-hs[order], 0.0)
        negative_mass = float(np.trapezoid(neg, xs[order])) if xs.size > 1 else 0.0
    diagnostics.update(
        inversions=len(nodes),
        outer_evaluations=n_eval,
        outer_error=err,
        negative_mass=negative_mass,
        seconds=time.perf_counter() - started,
    )
    if negative_mass > numerics.negative_mass_limit:
        raise NumericalError(
            f"inverted density has negative mass {negative_mass:.3g} > {numerics.negative_mass_limit}",
            estimate=value,
        )
    return PriceResult(max(float(value), 0.0), f"laplace-{numerics.inverter.method}", diagnostics)


def paris_down_out_call(
    market: MarketParams, contract: ParisianContract, numerics: NumericsConfig | None = None
) -> PriceResult:
    """Vanilla call minus the down-and-in call."""
    numerics = numerics or NumericsConfig()
    vanilla = vanilla_call(market, contract.strike, contract.time_to_maturity)
    knock_in = paris_down_in_call(market, contract, numerics)
    value = vanilla - knock_in.value
    diagnostics = dict(knock_in.diagnostics, vanilla=vanilla, down_in=knock_in.value)
    if value < 0:
        slack = 10.0 * numerics.price_rtol * max(vanilla, 1.0)
        diagnostics["clamped"] = value
        if value < -slack:
            diagnostics["warning"] = "down-in exceeds vanilla beyond numerical tolerance"
        value = 0.0
    return PriceResult(value, f"parity({knock_in.method})", diagnostics)
