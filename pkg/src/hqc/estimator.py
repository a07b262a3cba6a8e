"""A posteriori error indicators and adaptive refinement.

For a converged coarse solution the computable indicator terms are

    jump_term       = max over nodes of |D u(xi) - D u(xi - eps)|
    force_term      = ||(h - eps) f||_inf            (h(x) = h_T on T)
    quadrature_term = dual norm over zero-mean coarse functions of
                      v_h -> <F^h, v_h>_h - <f, v_h>_L

and the reported total is

    total = calibration_constant * jump_term + c0_inv * force_term
            + quadrature_term.

The analytic prefactor of the jump term is unknown, so the estimator keeps
the raw terms and a calibration constant (default 1) that can be fitted
once against a reference error; c0_inv is a configured stand-in for the
inverse coercivity constant, with a computable lower bound available from
``estimate_constants``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coarse import CoarseFn, ForceFunctional, Mesh1D, coarse_dual_norm
from .lattice import LatticeFn
from .microhom import HomogenizedLaw
from .potentials import Microstructure, PotentialFamily


@dataclass(frozen=True)
class ErrorReport:
    jump_term: float
    force_term: float
    quadrature_term: float
    calibration_constant: float
    c0_inv: float
    total: float
    #: per-element jump indicator (max of the two endpoint jumps)
    per_element_jumps: np.ndarray = field(repr=False)

    CSV_HEADER = "h_max,jump_term,force_term,quadrature_term,total"

    def csv_row(self, h_max: float) -> str:
        return ",".join(
            repr(float(v))
            for v in (h_max, self.jump_term, self.force_term, self.quadrature_term, self.total)
        )


def assemble_total(jump, force, quad, calibration_constant, c0_inv):
    return calibration_constant * jump + c0_inv * force + quad


def indicator_terms(
    u0h: CoarseFn,
    mesh: Mesh1D,
    f: LatticeFn,
    F: ForceFunctional,
    calibration_constant: float = 1.0,
    c0_inv: float = 1.0,
) -> ErrorReport:
    """Evaluate the three indicator terms for a converged coarse solution."""
    z = u0h.strains()
    node_jumps = np.abs(z - np.roll(z, 1))  # jump at node j: elements j-1 | j
    jump = float(node_jumps.max())
    per_element = np.maximum(node_jumps, np.roll(node_jumps, -1))
    h = mesh.h_fn().values
    force = float(np.abs((h - mesh.grid.eps) * f.values).max())
    quad = coarse_dual_norm(F.quadrature_gap(mesh))
    total = assemble_total(jump, force, quad, calibration_constant, c0_inv)
    return ErrorReport(jump, force, quad, calibration_constant, c0_inv, total, per_element)


def calibrate_constant(report: ErrorReport, reference_error: float) -> float:
    """Fit the jump-term prefactor so the total bounds a reference error."""
    if report.jump_term <= 0:
        raise ValueError("cannot calibrate with a vanishing jump term")
    return reference_error / report.jump_term


def estimate_constants(
    law: HomogenizedLaw,
    family: PotentialFamily,
    micro: Microstructure,
    z_lo: float = -0.1,
    z_hi: float = 0.1,
    samples: int = 101,
):
    """Sampled surrogate (C11, c0_lower) for the analytic constants.

    C11 = max_y sum_r r * max_z |d2 phi_r| with the curvature sampled at
    z + D_{y,r} chi_* over the configured macro-strain interval (only
    admissible samples contribute); c0_lower is the nearest-neighbor
    dominance margin.
    """
    from .potentials import nn_dominance_margin

    if samples < 1 or not z_hi >= z_lo:
        raise ValueError("empty sampling range")
    zs = np.linspace(z_lo, z_hi, samples)
    p = family.p
    chi = micro.chi_star.values
    per_y = np.zeros(p)
    for r in range(1, family.R + 1):
        d = (np.roll(chi, -r) - chi) / r
        worst = np.zeros(p)
        for j in range(p):
            args = zs + d[j]
            ok = np.asarray(family.admissible(r, args, j))
            if not ok.any():
                raise ValueError(f"no admissible sample for shell r={r}, species {j}")
            worst[j] = np.abs(family.d2(r, args[ok], j)).max()
        per_y += r * worst
    c11 = float(per_y.max())
    return c11, nn_dominance_margin(family, micro)


def adapt_mesh(mesh: Mesh1D, report: ErrorReport, theta: float) -> Mesh1D:
    """Bulk marking: bisect the smallest set of splittable elements whose
    jump indicators carry a theta-fraction of the total, at the atom site
    nearest the element midpoint (odd site counts split toward the lower
    index).  Unit-size elements are never split."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must be in (0, 1]")
    eta = np.asarray(report.per_element_jumps, dtype=float)
    counts = mesh.site_counts()
    splittable = counts >= 2
    total = eta[splittable].sum()
    if total <= 0.0 or not splittable.any():
        return mesh
    order = np.argsort(-eta)
    marked = []
    acc = 0.0
    for j in order:
        if not splittable[j]:
            continue
        marked.append(j)
        acc += eta[j]
        if acc >= theta * total - 1e-15 * total:
            break
    new_nodes = set(int(n) for n in mesh.nodes)
    for j in marked:
        left = int(mesh.nodes[j])
        mid = left + int(counts[j]) // 2
        new_nodes.add((mid - 1) % mesh.grid.N + 1)
    return Mesh1D(mesh.grid, np.array(sorted(new_nodes)))
