"""Market and contract types plus the reduction to Brownian coordinates.

All times are year fractions and all rates are annualized with continuous
compounding.  The contract records the *elapsed* age of an excursion that is
already in progress below the barrier; the remaining requirement ``d`` is
derived from it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "MarketParams",
    "ParisianContract",
    "DerivedParams",
    "validate",
    "derive_params",
]


@dataclass(frozen=True)
class MarketParams:
    """Black-Scholes market: spot, short rate, dividend yield, volatility."""

    spot: float
    rate: float
    dividend: float
    volatility: float


@dataclass(frozen=True)
class ParisianContract:
    """Parisian down-and-in call.

    Attributes:
        strike: call strike K.
        barrier: barrier level L (0 allowed: the option can never knock in).
        window: required excursion length D below the barrier.
        time_to_maturity: remaining life tau = T - t.
        elapsed_age: age of the excursion in progress (spot below barrier only).
    """

    strike: float
    barrier: float
    window: float
    time_to_maturity: float
    elapsed_age: float = 0.0


@dataclass(frozen=True)
class DerivedParams:
    """Normalized coordinates of the valuation problem.

    ``varpi`` is the drift of log(S)/sigma, ``b`` the normalized log-barrier
    (``-inf`` for a zero barrier), ``beta`` the normalized log-strike, ``d``
    the excursion time still required and ``tau`` the time to maturity.
    """

    varpi: float
    b: float
    beta: float
    d: float
    tau: float
    window: float

    @property
    def threshold(self) -> float:
        """Earliest possible knock-in time: D at or above the barrier, d below."""
        return self.d if self.b > 0 else self.window


def _finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise DomainError(f"{name} must be a finite real number, got {value!r}")


def validate(market: MarketParams, contract: ParisianContract) -> None:
    """Raise :class:`DomainError` naming the first violated invariant."""
    for name in ("spot", "rate", "dividend", "volatility"):
        _finite(f"market.{name}", getattr(market, name))
    for name in ("strike", "barrier", "window", "time_to_maturity", "elapsed_age"):
        _finite(f"contract.{name}", getattr(contract, name))

    if market.spot <= 0:
        raise DomainError(f"market.spot must be > 0, got {market.spot}")
    if market.rate <= 0:
        raise DomainError(f"market.rate must be > 0, got {market.rate}")
    if market.dividend < 0:
        raise DomainError(f"market.dividend must be >= 0, got {market.dividend}")
    if market.volatility <= 0:
        raise DomainError(f"market.volatility must be > 0, got {market.volatility}")

    if contract.strike <= 0:
        raise DomainError(f"contract.strike must be > 0, got {contract.strike}")
    if contract.barrier < 0:
        raise DomainError(f"contract.barrier must be >= 0, got {contract.barrier}")
    if contract.window <= 0:
        raise DomainError(f"contract.window must be > 0, got {contract.window}")
    if contract.time_to_maturity <= 0:
        raise DomainError(
            f"contract.time_to_maturity must be > 0, got {contract.time_to_maturity}"
        )
    if contract.elapsed_age < 0:
        raise DomainError(f"contract.elapsed_age must be >= 0, got {contract.elapsed_age}")
    if contract.elapsed_age >= contract.window:
        raise DomainError(
            "contract.elapsed_age must be < contract.window "
            "(an excursion of full length has already knocked the option in)"
        )
    if contract.elapsed_age > 0 and market.spot >= contract.barrier:
        raise DomainError(
            "contract.elapsed_age > 0 requires spot < barrier "
            "(no excursion can be in progress at or above the barrier)"
        )


def derive_params(market: MarketParams, contract: ParisianContract) -> DerivedParams:
    validate(market, contract)
    sigma = market.volatility
    varpi = (market.rate - market.dividend - 0.5 * sigma * sigma) / sigma
    if contract.barrier == 0:
        b = -math.inf
    else:
        # log1p of the exact relative gap keeps the sign of b equal to the sign
        # of barrier - spot even when the two differ in the last bit.
        b = math.log1p((contract.barrier - market.spot) / market.spot) / sigma
    beta = math.log(contract.strike / market.spot) / sigma
    return DerivedParams(
        varpi=varpi,
        b=b,
        beta=beta,
        d=contract.window - contract.elapsed_age,
        tau=contract.time_to_maturity,
        window=contract.window,
    )
