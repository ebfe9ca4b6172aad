"""nlslab: ground states, variational inequalities, and virial-driven blowup
for the focusing NLS with an attractive inverse-power (or delta) potential."""

from .params import ModelParams
from .grids import Grid, GridError, build_grid, sphere_area
from .profiles import (GaussianTag, Profile, ResolutionError, SechPowerTag,
                       gaussian, scale, sech_power)
from .functionals import (FunctionalReport, eval_G, eval_report, nehari_project,
                          residual_stationary)
from .ground_state import (GroundState, SolitonOracle, SolverError,
                           SpectralEstimate, compute_d,
                           delta_ground_state_closed_form, estimate_omega0,
                           load_ground_state, reference_soliton_gamma0,
                           save_ground_state, soliton_closed_form,
                           solve_ground_state)
from .variational import (ActionCurve, InequalityViolation, SetMembership,
                          action_curve, check_scaling_family,
                          equal_norm_competitors, g_chain, key_inequality,
                          membership, omega_scan, refine_omega1,
                          second_variation_at_1)
from .dynamics import (BlowupVerdict, SimulationTrace, build_cutoff_data,
                       detect_blowup, monitor_invariance, simulate,
                       virial_consistency)

__version__ = "0.1.0"


def __getattr__(name):
    # CLI helpers pull in config parsing; import lazily to keep the numeric
    # core import-light
    if name in ("run", "emit_report"):
        from . import cli
        return getattr(cli, name)
    if name in ("load_config", "RunConfig", "ConfigError"):
        from . import config
        return getattr(config, name)
    raise AttributeError(name)
