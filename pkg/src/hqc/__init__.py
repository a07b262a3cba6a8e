"""Homogenized quasicontinuum solvers for periodic multilattice chains.

Equilibria of one-dimensional atomistic chains with a p-periodic
microstructure are computed three ways: a full atomistic reference solve,
a homogenized solve whose effective law is obtained on the fly from local
cell problems, and a coarse-grained piecewise-affine solve with a
post-processing corrector that restores the atomistic-scale oscillation.
A posteriori indicators drive adaptive mesh refinement, and a 2D linear
spring lattice exercises the same homogenize/correct pipeline in two
dimensions.
"""

from .exceptions import ConfigError, DomainError, SolverFailure, StabilityError
from .lattice import (
    LatticeFn,
    LatticeGrid,
    MicroFn,
    average_r,
    diff_r,
    dual_seminorm_neg1,
    inner,
    norm,
    project_zero_mean,
    seminorm,
    translate,
)
from .potentials import (
    Microstructure,
    PotentialFamily,
    ground_microstructure,
    lj_family,
    nn_dominance_margin,
    quadratic_family,
)
from .microhom import HomogenizedLaw, MicroSolution, homogenized_eval, solve_cell
from .atomistic import (
    AtomisticProblem,
    EquilibriumSolution,
    energy_grad_hess,
    solve_atomistic,
    solve_homogenized_full,
)
from .coarse import (
    CoarseFn,
    CoarseSolution,
    EquivalenceReport,
    ForceFunctional,
    Mesh1D,
    corrector,
    equivalence_check,
    interpolate,
    istar,
    solve_coarse,
    uniform_mesh,
)
from .estimator import (
    ErrorReport,
    adapt_mesh,
    calibrate_constant,
    estimate_constants,
    indicator_terms,
)
from .lattice2d import (
    Corrector2D,
    Displacement2D,
    Homogenized2D,
    SpringModel2D,
    chi_analytic,
    energy2d,
    exp_sin_force,
    gradient_error,
    homogenize2d,
    solve2d,
)
from .config import ExperimentConfig, build_config, load_experiment_config, parse_config
from .study import StudyRow, fit_slope, read_rows_csv, run_study, run_study_2d, write_rows_csv

__version__ = "0.1.0"
