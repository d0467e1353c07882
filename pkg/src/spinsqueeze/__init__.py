"""Spin squeezing in finite-temperature two-component Bose gases.

Lattice classical-field Monte Carlo plus closed-form quasi-particle analytics
for the squeezing dynamics triggered by a pi/2 pulse on a thermal condensate.
"""

__version__ = "0.1.0"

from .model import (PhysicalParams, Grid, derive_params, solve_cutoff, build_grid,
                    bare_coupling, simulation_setup)
from .analytics import (BogoliubovPoint, CorrelatorSet, ModeSet, AnalyticCurve,
                        dispersion, occupation, correlators, xi2_min,
                        noncondensed_fraction, xi2_of_t, t_best, two_mode_xi2)
from .dynamics import FieldPair, apply_pulse, evolve, checkpoint, restore
from .sampler import SamplerConfig, ThermalSampler, sample_thermal_field, sample_vacuum_field
from .observables import SpinMoments, SqueezingCurve, spin_moments, xi2, xi0_2, summarize_curve
from .bogosim import BogoliubovState, project_to_bogoliubov, evolve_bogoliubov, reconstruct_squeezing

__all__ = [
    "__version__",
    "PhysicalParams", "Grid", "derive_params", "solve_cutoff", "build_grid",
    "bare_coupling", "simulation_setup",
    "BogoliubovPoint", "CorrelatorSet", "ModeSet", "AnalyticCurve",
    "dispersion", "occupation", "correlators", "xi2_min",
    "noncondensed_fraction", "xi2_of_t", "t_best", "two_mode_xi2",
    "FieldPair", "apply_pulse", "evolve", "checkpoint", "restore",
    "SamplerConfig", "ThermalSampler", "sample_thermal_field", "sample_vacuum_field",
    "SpinMoments", "SqueezingCurve", "spin_moments", "xi2", "xi0_2", "summarize_curve",
    "BogoliubovState", "project_to_bogoliubov", "evolve_bogoliubov", "reconstruct_squeezing",
]
