"""Parisian down-and-in call pricing by Laplace inversion, with a Monte Carlo oracle."""

from .config import RunConfig, dump_config, load_config, parse_config
from .errors import ConfigError, DomainError, NumericalError, ParisianError, RangeError
from .inversion import InverterConfig, laplace_invert
from .mc import (
    McEstimate,
    PathConfig,
    mc_exit_time_transform,
    mc_hb_lemma_estimate,
    mc_price,
    mc_price_refinement,
    simulate_knock_in,
)
from .model import DerivedParams, MarketParams, ParisianContract, derive_params, validate
from .pricing import (
    NumericsConfig,
    PriceResult,
    hb_density,
    paris_down_in_call,
    paris_down_out_call,
    vanilla_call,
)
from .special import psi, truncated_fp_transform
from .transforms import (
    ExcursionSpec,
    TransformEvaluator,
    exit_time_transform,
    h_b3_closed,
    h_b4_closed,
    hb_transform,
    hb_transform_nonpos,
    hb_transform_pos,
    hb_transform_pos_grouped,
    hb_transform_pos_product,
)

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "dump_config", "load_config", "parse_config",
    "ConfigError", "DomainError", "NumericalError", "ParisianError", "RangeError",
    "InverterConfig", "laplace_invert",
    "McEstimate", "PathConfig", "mc_exit_time_transform", "mc_hb_lemma_estimate",
    "mc_price", "mc_price_refinement", "simulate_knock_in",
    "DerivedParams", "MarketParams", "ParisianContract", "derive_params", "validate",
    "NumericsConfig", "PriceResult", "hb_density", "paris_down_in_call",
    "paris_down_out_call", "vanilla_call",
    "psi", "truncated_fp_transform",
    "ExcursionSpec", "TransformEvaluator", "exit_time_transform", "h_b3_closed", "h_b4_closed",
    "hb_transform", "hb_transform_nonpos", "hb_transform_pos", "hb_transform_pos_grouped",
    "hb_transform_pos_product",
]
