"""Statistical equilibrium of hydrogen in electric and magnetic fields.

Builds the fine-structure density-matrix model of hydrogen up to a chosen
principal quantum number, solves the stationary equations under broadband
unpolarized illumination with static E and B fields, and derives the
alignment of the atomic terms and the polarization of the emitted lines.
"""

__version__ = "0.1.0"

from .angular_momentum import sixj, threej, wigner3j, wigner6j
from .density_matrix import DensityMatrix, StatisticalTensors, observables
from .emission import StokesResult, ViewingGeometry, stokes_emissivity
from .field_sweep import FieldDistribution, FigureConfig, reproduce_figure, sweep
from .hydrogen_model import LevelScheme, build_levels
from .radiation_field import Illumination, rates
from .se_solver import FieldConfig, SESystem, SingularSystemError, assemble, solve, stationary_solve
from .toy_model import ToyRates, toy_solve

__all__ = [
    "sixj", "threej", "wigner3j", "wigner6j",
    "DensityMatrix", "StatisticalTensors", "observables",
    "StokesResult", "ViewingGeometry", "stokes_emissivity",
    "FieldDistribution", "FigureConfig", "reproduce_figure", "sweep",
    "LevelScheme", "build_levels",
    "Illumination", "rates",
    "FieldConfig", "SESystem", "SingularSystemError", "assemble", "solve", "stationary_solve",
    "ToyRates", "toy_solve",
]
