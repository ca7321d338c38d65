"""Partially congested viscous shock profiles and their stability."""

from .pressure_model import (CongestionError, ModelParams, pressure,
                             nonlinear_F, nonlinear_F_diff, nonlinear_H,
                             nonlinear_H_diff)
from .profile import (TransitionAnchor, ValueAtZero, LimitProfile,
                      TravelingWave, shock_speed, solve_profile,
                      limit_profile, solve_corrector, transition_params,
                      build_expansion, approx_profile, barrier_rates,
                      solve_barriers, min_shift_distance, congested_decay_fit,
                      transition_error)

__version__ = "0.1.0"
