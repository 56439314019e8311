"""Stochastic SIV epidemic models with branching-process extinction analysis."""

from .params import (MassAction, ParamError, ParamSet, ParamSet1P, ParamSet2P,
                     Saturating, params_from_json, params_to_json)
from .models import (EquilibriumNotFound, ModelSpec, Reaction, build_model,
                     build_one_patch, build_two_patch, dfe,
                     deterministic_field, endemic_equilibrium,
                     endemic_infectious_total, r0, two_patch_r0)
from .rng import RngSpec, Stream
from .ode import IntegrationError, Trajectory, integrate
from .ssa import (ExtinctionEstimate, McEstimate, Outcome, StopRule, Subspace,
                  estimate_extinction, resolve_threshold, set_threads,
                  simulate_one)
from .branching import (ExtinctionVector, OffspringPgf, expectation_matrix,
                        extinction_closed_form, extinction_iterate,
                        extinction_report, is_primitive, offspring_pgf_at_dfe,
                        p0, spectral_radius)
from .experiments import (OracleBracket, PowerLawFit, StateSpaceOverflow,
                          SweepRow, TableResult, beta_sweep, fit_power_law,
                          reproduce_table, truncated_oracle)

__version__ = "1.0.0"

__all__ = [name for name in dir() if not name.startswith("_")]
