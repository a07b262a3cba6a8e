"""Full-lattice equilibrium solvers.

``solve_atomistic`` finds the zero-mean displacement u with

    <dE(u), v> = <rhs, v>   for all zero-mean v,

where E(u) = < sum_r phi_r(D_r u; .) > is the multilattice energy, by a
damped Newton iteration with cyclic banded Jacobians of halfwidth R.
Termination is measured in the (-1, inf) dual seminorm of the residual
functional, matching the error topology of the coarse-graining analysis.

``solve_homogenized_full`` solves the same kind of problem for the
homogenized nearest-neighbor density phi0 on the full lattice; there the
strong form -D[dphi0(D u)] = T f exists and termination uses its max norm
(which dominates the dual norm).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, SolverFailure
from .lattice import LatticeFn, LatticeGrid, dual_seminorm_neg1
from .linsolve import solve_cyclic_banded
from .microhom import HomogenizedLaw
from .potentials import PotentialFamily

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AtomisticProblem:
    """Grid, interaction family, and a zero-mean external force.

    A force with nonzero mean is projected at construction; the subtracted
    constant is recorded in ``subtracted_mean`` and logged.
    """

    grid: LatticeGrid
    family: PotentialFamily
    force: LatticeFn
    subtracted_mean: float = 0.0

    def __post_init__(self):
        if self.grid.p != self.family.p:
            raise ValueError("grid period and family period differ")
        m = self.force.values.mean()
        if abs(m) > 1e-12:
            log.info("projecting force to zero mean (subtracted constant %.3e)", m)
            object.__setattr__(self, "force", self.force.with_values(self.force.values - m))
            object.__setattr__(self, "subtracted_mean", float(m))


@dataclass(frozen=True)
class EquilibriumSolution:
    u: LatticeFn
    residual_dual: float
    iterations: int
    #: rows (iteration, residual_dual, step_damping)
    trace: tuple = field(default=(), repr=False)


def _strain_args(family, grid, u_vals):
    eps = grid.eps
    return {
        r: (np.roll(u_vals, -r) - u_vals) / (r * eps)
        for r in range(1, family.R + 1)
    }


def _check_admissible(family, grid, args):
    y = grid.species()
    for r, z in args.items():
        ok = np.asarray(family.admissible(r, z, y))
        if not ok.all():
            site = int(np.where(~ok)[0][0]) + 1
            raise DomainError(f"inadmissible bond at site {site}, shell r={r}")


def energy_grad_hess(prob: AtomisticProblem, u: LatticeFn):
    """Energy, gradient (as a LatticeFn), and cyclic banded Hessian.

    The gradient g represents the first variation through <g, v>_L; the
    Hessian is returned as cyclic diagonals of shape (2R+1, N) with
    halfwidth R (see :mod:`hqc.linsolve`).
    """
    grid, family = prob.grid, prob.family
    eps = grid.eps
    N = grid.N
    R = family.R
    y = grid.species()
    args = _strain_args(family, grid, u.values)
    _check_admissible(family, grid, args)

    E = 0.0
    g = np.zeros(N)
    diags = np.zeros((2 * R + 1, N))
    for r, z in args.items():
        E += float(family.eval(r, z, y).mean())
        w = family.d1(r, z, y)
        g += (np.roll(w, r) - w) / (r * eps)
        d = family.d2(r, z, y) / (r * eps) ** 2
        d_shift = np.roll(d, r)  # value d(x - r eps)
        diags[R] += d + d_shift
        diags[R + r] += -d
        diags[R - r] += -d_shift
    return E, u.with_values(g), diags


def _dual_residual(grid, rho_vals):
    w = grid.eps * np.cumsum(rho_vals - rho_vals.mean())
    return 0.5 * float(w.max() - w.min())


def solve_atomistic(
    prob: AtomisticProblem,
    rhs: LatticeFn | None = None,
    u_init: LatticeFn | None = None,
    tol: float = 1e-10,
    max_iter: int = 60,
    damping_max: int = 30,
) -> EquilibriumSolution:
    """Damped Newton on the zero-mean space; accepts any zero-mean rhs.

    Each step solves the mean-regularized cyclic banded system and projects
    the iterate back to zero mean; backtracking halves the step on residual
    increase or on a domain error.
    """
    grid = prob.grid
    f = (rhs or prob.force).values
    f = f - f.mean()
    u = np.zeros(grid.N) if u_init is None else u_init.values - u_init.values.mean()

    def residual(u_vals):
        _, g, diags = energy_grad_hess(prob, LatticeFn(grid, u_vals))
        rho = g.values - f
        return rho, diags, _dual_residual(grid, rho)

    rho, diags, res = residual(u)
    trace = [(0, res, 0.0)]
    it = 0
    while res > tol:
        if it >= max_iter:
            raise SolverFailure(
                f"atomistic Newton: residual {res:.3e} after {max_iter} iterations", trace
            )
        it += 1
        alpha = 1.0 + float(np.abs(diags[diags.shape[0] // 2]).mean())
        step = solve_cyclic_banded(diags, -rho, mean_reg=alpha)
        step -= step.mean()
        t = 1.0
        accepted = False
        last_domain_error = None
        for _ in range(damping_max + 1):
            trial = u + t * step
            trial -= trial.mean()
            try:
                rho_t, diags_t, res_t = residual(trial)
            except DomainError as exc:
                last_domain_error = exc
                t *= 0.5
                continue
            if res_t < res:
                u, rho, diags, res = trial, rho_t, diags_t, res_t
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if last_domain_error is not None:
                raise DomainError(
                    f"Newton step not recoverable by damping: {last_domain_error}"
                ) from last_domain_error
            raise SolverFailure(f"atomistic Newton stalled at residual {res:.3e}", trace)
        trace.append((it, res, t))
    return EquilibriumSolution(LatticeFn(grid, u), res, it, tuple(trace))


def solve_homogenized_full(
    law: HomogenizedLaw,
    grid: LatticeGrid,
    f: LatticeFn,
    tol: float = 1e-10,
    max_iter: int = 60,
    damping_max: int = 30,
) -> EquilibriumSolution:
    """Full-lattice solve of the homogenized problem.

    Newton on -D[dphi0(D u)] = T f, with the cell problem solved at every
    site strain per iteration (vectorized, warm-started from the previous
    iterate).  Terminates when the strong-form residual max norm is <= tol;
    the trace records the dual-norm residual for comparability with
    :func:`solve_atomistic`.

    The strong form divides by eps, so its attainable floor grows roughly
    like N^2 * machine eps * (law magnitude); pass a looser tol for large
    N (the default suits N up to a few hundred for O(50) forces).
    """
    eps = grid.eps
    fv = f.values - f.values.mean()
    u = np.zeros(grid.N)
    chi_warm = None

    def residual(u_vals, warm):
        z = (np.roll(u_vals, -1) - u_vals) / eps
        _phi0, dphi0, d2phi0, chi = law.eval_strains(z, warm=warm)
        rho = (np.roll(dphi0, 1) - dphi0) / eps - fv
        return rho, d2phi0, chi

    rho, d2, chi_warm = residual(u, None)
    res = float(np.abs(rho).max())
    trace = [(0, _dual_residual(grid, rho), 0.0)]
    it = 0
    while res > tol:
        if it >= max_iter:
            raise SolverFailure(
                f"homogenized Newton: residual {res:.3e} after {max_iter} iterations", trace
            )
        it += 1
        diags = np.zeros((3, grid.N))
        d_shift = np.roll(d2, 1)
        diags[1] = (d2 + d_shift) / eps**2
        diags[2] = -d2 / eps**2
        diags[0] = -d_shift / eps**2
        alpha = 1.0 + float(np.abs(diags[1]).mean())
        step = solve_cyclic_banded(diags, -rho, mean_reg=alpha)
        step -= step.mean()
        t = 1.0
        accepted = False
        last_domain_error = None
        for _ in range(damping_max + 1):
            trial = u + t * step
            trial -= trial.mean()
            try:
                rho_t, d2_t, chi_t = residual(trial, chi_warm)
            except DomainError as exc:
                last_domain_error = exc
                t *= 0.5
                continue
            res_t = float(np.abs(rho_t).max())
            if res_t < res:
                u, rho, d2, chi_warm, res = trial, rho_t, d2_t, chi_t, res_t
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if last_domain_error is not None:
                raise DomainError(
                    f"homogenized Newton step not recoverable by damping: {last_domain_error}"
                ) from last_domain_error
            raise SolverFailure(f"homogenized Newton stalled at residual {res:.3e}", trace)
        trace.append((it, _dual_residual(grid, rho), t))
    return EquilibriumSolution(
        LatticeFn(grid, u), _dual_residual(grid, rho), it, tuple(trace)
    )
