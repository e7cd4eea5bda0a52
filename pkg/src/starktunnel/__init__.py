"""Tunneling dynamics of a 1D tilted-well model, solved through outgoing
resonance poles plus a shifted-contour spectral integral, with an independent
grid propagator for cross-validation."""

from .precision import PrecisionContext, PrecisionError
from .model import ModelParams, BoundState, bound_states, select_state
from .poles import ResonantPole, PoleSet, find_pole, enumerate_poles
from .spectral import SpectralAmplitude, amp_inside, amp_outside, amplitude
from .contour import ContourSpec, build_contour
from .evolve import SpectralPropagator, WavefunctionField
from .gridprop import GridSpec, evolve_grid, absorber_calibrate
from .analysis import (ArrivalRecord, TrajectoryFit, t_eta, exit_point,
                       peak_arrival, fit_trajectory, norm_audit)
from .config import RunConfig
from .errors import (ConfigError, CertificationError, DegeneratePoleError,
                     OracleMismatchError)

__version__ = "0.1.0"

__all__ = [
    "PrecisionContext", "PrecisionError", "ModelParams", "BoundState",
    "bound_states", "select_state", "ResonantPole", "PoleSet", "find_pole",
    "enumerate_poles", "SpectralAmplitude", "amp_inside", "amp_outside",
    "amplitude", "ContourSpec", "build_contour", "SpectralPropagator",
    "WavefunctionField", "GridSpec", "evolve_grid", "absorber_calibrate",
    "ArrivalRecord", "TrajectoryFit", "t_eta", "exit_point", "peak_arrival",
    "fit_trajectory", "norm_audit", "RunConfig", "ConfigError",
    "CertificationError", "DegeneratePoleError", "OracleMismatchError",
]
