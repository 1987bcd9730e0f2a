"""Tipping-pulse control of an rf-SQUID flux qubit."""
from .analytic import (
    PerturbationMatrix, RabiSolution, Schedule, design_schedule, perturbation_matrix,
    phase_advance, rabi_solution, resonance_scan, resonance_spacing,
)
from .evolve import (
    PulseTrain, StateVector, Trajectory, direct_integrate, free_evolve, measure_period,
    project, run_pulse_train, well_probabilities,
)
from .model import Constants, ScaledParams, SquidParams, beta_L, nondimensionalize, potential
from .spectral import EigenSystem, GridSpec, classify_parity, discretize, eigensolve, \
    levels_below_barrier

__version__ = "0.1.0"
