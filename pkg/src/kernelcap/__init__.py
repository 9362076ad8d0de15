"""Classical capacity of generalized Pauli channels under memory-kernel dynamics."""

from .capacity import CapacityKind, CapacityResult, c_alpha, classify_and_compute
from .channel import ChannelSpectrum, CpReport, ProbabilityVector, check_cp, probs_from_spectrum, spectrum_from_probs
from .dynamics import EigenTrajectory, KernelFunction, solve_nakajima_zwanzig, uniform_grid
from .engineering import Trajectory, advantage_windows, capacity_trajectory, full_cp_validation, sweep
from .mub import MubFamily, build_mub_family
from .scenarios import ScenarioSpec, Variant

__version__ = "0.1.0"
