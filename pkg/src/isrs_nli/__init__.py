"""Closed-form nonlinear interference estimation for ultra-wideband WDM
links with inter-channel stimulated Raman scattering."""

__version__ = "0.1.0"

from .core import (BandSegment, Channel, ChannelPlan, FiberProfile, InputError, LinkSpec,
                   NumericalError, build_channel_plan, convert_dispersion, excess_kurtosis,
                   format_kurtosis)
from .raman import PowerEvolution, ZGrid, solve_raman
from .fit import EffectiveParams, FitError, eval_first_order_profile, fit_all, fit_effective_params
from .closed_form import NliResult, compute_nli, total_snr
from .engine import EngineOptions, LinkResult, evaluate_link

__all__ = [
    "BandSegment", "Channel", "ChannelPlan", "FiberProfile", "InputError", "LinkSpec",
    "NumericalError", "build_channel_plan", "convert_dispersion", "excess_kurtosis",
    "format_kurtosis", "PowerEvolution", "ZGrid", "solve_raman", "EffectiveParams",
    "FitError", "eval_first_order_profile", "fit_all", "fit_effective_params", "NliResult",
    "compute_nli", "total_snr", "EngineOptions", "LinkResult", "evaluate_link",
]
