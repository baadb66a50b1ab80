"""Numerical laboratory for geometric flows: conjugate-heat weighted
measures, drift spectra and parabolic frequency monotonicity."""

from .backends import (ConformalState, ScalarField, SphereState,
                       SymTensorField, WarpedState, Weights, constant_field,
                       gradient_norm_sq, hessian_energy, integrate, inner,
                       laplace_beltrami, scalar_curvature, scalar_field,
                       volume_weights)
from .config import ScenarioConfig, parse_config
from .errors import (BackendError, CFLError, ConfigError, DivergenceError,
                     DomainError, ExtinctionError, GeoflowError,
                     PositivityError, ResolutionError, StepError)
from .estimates import (SlackReport, hamilton_gradient_check,
                        hypothesis_band_check, li_yau_check)
from .flows import (Trajectory, check_volume_evolution, evolve_ricci,
                    evolve_ricci_harmonic)
from .frequency import (FrequencySeries, choose_kappa, compute_I_D,
                        compute_u3, compute_u4, first_eigenvalue,
                        ratio_lower_bound)
from .harness import (CheckItem, Report, refinement_study, run_scenario,
                      scenario_names, load_scenario_text, verify_monotone)
from .heat import (HeatSolution, closed_form_sphere_solution, evaluate_zonal,
                   solve_heat)
from .measures import (WeightSystem, bakry_emery_bound, drift_laplacian,
                       potential_and_measure, solve_conjugate_backward,
                       uniform_terminal)
from .schedules import HSchedule, Schedule

__version__ = "0.1.0"
