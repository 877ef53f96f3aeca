"""Viscous scalar balance laws with periodic heterogeneity."""

from .cell import (CellSolution, CellTolerances, HomogenizedFluxTable, InvariantMeasure,
                   check_convexity, check_oleinik, find_rh_pairs, flux_average,
                   homogenized_flux_table, invariant_measure, solve_cell_by_mean,
                   solve_cell_by_offset)
from .errors import *  # noqa: F401,F403
from .evolve import (Dirichlet, EvolveConfig, Field, Grid1D, Periodic, Trajectory, evolve,
                     max_speed, numerical_flux, stable_dt, step)
from .flux import (FluxModel, FourierSeries, burgers_flux, make_flux, make_homogeneous_flux,
                   make_linear_flux, make_polynomial_flux, make_separable_convex_flux,
                   probe_growth_hypotheses)
from .shock import (ShockFamily, ShockProfile, ShockTolerances, build_shock,
                    detect_asymptotic_state, end_state_sign_check, estimate_exponential_rate,
                    select_zero_mass_shock, shock_difference_mass, translate)
from .stability import (DecayFit, ExperimentReport, Verdict, build_bracketing_functions,
                        coproperty_check, distance_to_band, entropy_smallness_sweep, fit_decay,
                        linear_drift_experiment, periodic_convergence, shock_stability,
                        uniform_bound_probe, weighted_entropy_series)

__version__ = "0.1.0"
