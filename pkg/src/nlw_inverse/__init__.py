"""Recovering the nonlinearity of a semilinear wave equation from scattering data.

Modules:
    closed_forms   explicit probe waves and the distribution function m
    weight_deconv  the kernel w, its transform, deconvolution and H <-> F
    wave_engine    radial solver, Picard iteration, wave/scattering operators
    born_pipeline  Born functional, measurement sweeps, recovery and studies
    cli            command-line entry point
"""

from .closed_forms import ScaleParams, eval_u_lin, m_closed, m_oracle
from .nonlinearity import NonlinearitySpec, check_admissible
from .radial import RadialGrid, RadialState, energy_norm_sq
from .weight_deconv import (
    DeconvConfig,
    F_from_H,
    H_from_F,
    SampledFunction,
    convolve,
    deconvolve,
    eval_w,
    w_hat,
)
from .wave_engine import propagate_linear, scattering_operator, solve_nlw, wave_operator
from .born_pipeline import SweepPlan, born_functional, measure_hw_sample, run_sweep

__version__ = "0.1.0"

__all__ = [
    "ScaleParams", "eval_u_lin", "m_closed", "m_oracle",
    "NonlinearitySpec", "check_admissible",
    "RadialGrid", "RadialState", "energy_norm_sq",
    "DeconvConfig", "F_from_H", "H_from_F", "SampledFunction", "convolve", "deconvolve",
    "eval_w", "w_hat",
    "propagate_linear", "scattering_operator", "solve_nlw", "wave_operator",
    "SweepPlan", "born_functional", "measure_hw_sample", "run_sweep",
]
