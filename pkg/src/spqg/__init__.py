"""Pseudo-spectral laboratory for the quasi-geostrophic limit of rotating
compressible flow: spectral core, wave algebra, 2D/3D solvers, dispersion
probes, and delta-sweep experiments."""

from .dispersion import (
    DispersionProbe,
    ScalingFit,
    admissible,
    fit_scaling,
    kernel_supnorm,
    mk,
    strichartz_ratio,
    verify_3d_block_decay,
)
from .dyadic import DyadicLadder, dyadic_block
from .experiments import (
    ExperimentConfig,
    SweepRecord,
    emit_outputs,
    pv_error_diag,
    run_dispersion3d,
    run_experiment,
    run_qg_convergence,
)
from .grids import BoxGrid, SpectralField, apply_multiplier, dealias
from .norms import (
    NormSpec,
    besov_norm,
    chemin_lerner_norm,
    l2_norm,
    lp_norm,
    sobolev_norm,
    time_lebesgue_norm,
)
from .qg import QGState, init_from_data, invert_pv, solve_qg, step_qg
from .snapshots import read_snapshot, write_snapshot
from .solver2d import (
    SolverConfig2D,
    State2D,
    advect_scalar,
    nonlinear_rhs_2d,
    solve_intermediate,
    step_if_rk4_2d,
)
from .solver3d import (
    ForcingContext,
    State3D,
    coupling_rhs,
    extend_2d_to_3d,
    nonlinear_rhs_3d,
    reconstruct_density,
    reconstruct_full,
    solve_perturbed,
)
from .waves import (
    PhysicalParams,
    assemble_symbol_2d,
    assemble_symbol_3d,
    eigendecompose_2d,
    eigendecompose_3d,
    linear_propagate,
    project,
    slow_fast_split,
)

__version__ = "0.1.0"
