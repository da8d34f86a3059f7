"""Coefficient-space operators of the variational formulation.

Assembles the mass matrix M_ij = (phi_j, phi_i), stiffness matrix
S_ij = (dphi_j/dx, dphi_i/dx), convection matrix C_ij = (dphi_j/dx, phi_i),
and forcing vectors (f, phi_i), plus the skew-symmetric trilinear form

    b(u, v, w) = (1/3) int ( d(uv)/dx + u dv/dx ) w dx
               = (1/3) int ( u' v + 2 u v' ) w dx

with its residual vector b(rho, rho, phi_i) and Newton Jacobian.  The
expanded integrand is polynomial on each element, so the 4-point
assembly rule integrates it exactly for P1 and P2; skew symmetry
b(u,v,w) = -b(u,w,v) then holds to rounding on periodic meshes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import (
    ASSEMBLY_RULE,
    FeFunction,
    Mesh1D,
    element_values,
    mass_matrix,
    require_same_mesh,
    sample_function,
    shape_derivatives,
    shape_values,
)


@dataclass(frozen=True, eq=False)
class AssembledOperators:
    """Mass, stiffness, and convection matrices for one mesh."""

    mesh: Mesh1D
    mass: np.ndarray
    stiffness: np.ndarray
    convection: np.ndarray


def assemble(mesh: Mesh1D) -> AssembledOperators:
    """Assemble M, S, and C element by element."""
    rule = ASSEMBLY_RULE
    basis = shape_values(mesh.degree, rule.points)  # (n_q, n_loc)
    dbasis = shape_derivatives(mesh.degree, rule.points)
    w = rule.weights

    m_loc = mesh.h * np.einsum("q,qi,qj->ij", w, basis, basis)
    s_loc = np.einsum("q,qi,qj->ij", w, dbasis, dbasis) / mesh.h
    # (dphi_j, phi_i): the element h and the 1/h of the derivative cancel.
    c_loc = np.einsum("q,qi,qj->ij", w, basis, dbasis)

    n = mesh.n_dofs
    m = np.zeros((n, n))
    s = np.zeros((n, n))
    c = np.zeros((n, n))
    rows = mesh.cell_dofs[:, :, None]
    cols = mesh.cell_dofs[:, None, :]
    np.add.at(m, (rows, cols), m_loc)
    np.add.at(s, (rows, cols), s_loc)
    np.add.at(c, (rows, cols), c_loc)
    return AssembledOperators(mesh=mesh, mass=m, stiffness=s, convection=c)


def forcing_vector(f: Callable, t: float, mesh: Mesh1D) -> np.ndarray:
    """Load vector with entries (f(., t), phi_i) by quadrature."""
    rule = ASSEMBLY_RULE
    basis = shape_values(mesh.degree, rule.points)
    xq = mesh.quad_points(rule)
    fq = sample_function(lambda x: f(x, t), xq)
    local = mesh.h * np.einsum("q,eq,qi->ei", rule.weights, fq, basis)
    out = np.zeros(mesh.n_dofs)
    np.add.at(out, mesh.cell_dofs, local)
    return out


def b_form(u: FeFunction, v: FeFunction, w: FeFunction) -> float:
    """Trilinear form b(u, v, w) = (1/3) int (u'v + 2uv') w dx."""
    mesh = require_same_mesh(u, v, w)
    rule = ASSEMBLY_RULE
    uq, duq = element_values(u, rule)
    vq, dvq = element_values(v, rule)
    wq, _ = element_values(w, rule)
    integrand = (duq * vq + 2.0 * uq * dvq) * wq / 3.0
    return float(mesh.h * np.einsum("q,eq->", rule.weights, integrand))


def b_residual(rho: FeFunction) -> np.ndarray:
    """Vector of b(rho, rho, phi_i); with u = v the integrand is rho rho' phi_i."""
    mesh = rho.mesh
    rule = ASSEMBLY_RULE
    basis = shape_values(mesh.degree, rule.points)
    uq, duq = element_values(rho, rule)
    local = mesh.h * np.einsum("q,eq,qi->ei", rule.weights, uq * duq, basis)
    out = np.zeros(mesh.n_dofs)
    np.add.at(out, mesh.cell_dofs, local)
    return out


def b_jacobian(rho: FeFunction) -> np.ndarray:
    """Derivative of b_residual: J d = b(d, rho, phi_i) + b(rho, d, phi_i).

    The two slots combine to int (rho d' + rho' d) phi_i dx, so the local
    block is (rho_q D_j + h rho'_q B_j) B_i with the affine factors folded in.
    """
    mesh = rho.mesh
    rule = ASSEMBLY_RULE
    basis = shape_values(mesh.degree, rule.points)
    dbasis = shape_derivatives(mesh.degree, rule.points)
    uq, duq = element_values(rho, rule)
    w = rule.weights
    local = np.einsum("q,eq,qj,qi->eij", w, uq, dbasis, basis)
    local += mesh.h * np.einsum("q,eq,qj,qi->eij", w, duq, basis, basis)
    n = mesh.n_dofs
    jac = np.zeros((n, n))
    np.add.at(jac, (mesh.cell_dofs[:, :, None], mesh.cell_dofs[:, None, :]), local)
    return jac


__all__ = [
    "AssembledOperators",
    "assemble",
    "forcing_vector",
    "b_form",
    "b_residual",
    "b_jacobian",
    "mass_matrix",
]
