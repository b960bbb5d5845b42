"""Soliton dynamics laboratory: exact N-solitons of cubic NLS, Fourier
spectral Gross-Pitaevskii and mKdV solvers, and the finite-dimensional
effective dynamics obtained by restricting the Hamiltonian flow to the
soliton manifold."""

__version__ = "0.1.0"

from .grid import Grid, SpectralField, decay_guard, rescale_field, sobolev_norm
from .solitons import (
    SolitonParams,
    eval_qN_det,
    eval_qN_solve,
    exact_flow,
    qN_param_gradient,
    rescale_soliton_params,
    sample_on_grid,
)
from .potential import PotentialExpr, parse_expression, eval_on_grid, rescaled_potential
from .effective import (
    HamiltonianContext,
    compute_VN,
    compute_VN_gradient,
    effective_rhs,
    integrate_effective,
    restricted_hamiltonian,
    symplectic_matrix,
)
from .pde import gp_energy, gp_nonlinear, mass, solve_pde
from .schemes import (
    ark436_coefficients,
    ark436_step,
    etd_coefficients,
    etdrk4_step,
    gp_linear_symbol,
)
from .mkdv import (
    MkdvContext,
    MkdvSolitonParams,
    integrate_mkdv_effective,
    mkdv_effective_rhs,
    mkdv_hamiltonian,
    mkdv_nsoliton,
    mkdv_soliton,
    solve_mkdv,
)
from .analysis import (
    ErrorSeries,
    FitResult,
    ehrenfest_window,
    estimate_convergence_order,
    fit_exponential,
    fit_loglog_slope,
    relative_h1_error,
)
from .config import ExperimentConfig, load_config
from .runner import RunArtifacts, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]
