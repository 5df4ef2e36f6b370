"""Pseudo-spectral solvers for the zero-relaxation limit of Euler-Maxwell and Euler-Poisson."""

from .config import ExperimentConfig, load_config
from .diagnostics import error_breakdown, error_functionals, fit_rate
from .drift_diffusion import (DDState, dd_step, reconstruct_fields, stream_identity_residual,
                              stream_potential)
from .equilibrium import (EquilibriumState, equilibrium_residuals, load_equilibrium,
                          save_equilibrium, solve_equilibrium)
from .errors import (CflViolation, ConstraintDrift, DegenerateFit, EmRelaxError, GridMismatch,
                     NegativeDensityIterate, NoConvergence, NonPositiveDensity, NonZeroMeanRhs,
                     SweepFailure)
from .experiments import benchmark, run_sweep
from .grid import PeriodicGrid
from .laws import DopingMode, DopingProfile, PressureLaw
from .relaxation import (EMState, EPState, RelaxationConfig, Trajectory, em_rhs, em_step,
                         ep_rhs, ep_step, integrate, integrate_limit, stable_dt,
                         well_prepared_initial_data)
from .snapshot import read_snapshot, write_snapshot
from .structure import (StructureMatrices, antisymmetry_defect, build_structure,
                        structure_audit, taylor_remainder)

__version__ = "0.1.0"
