"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from lwrfem.mesh import FeFunction, Mesh1D, QuadratureRule, element_values, evaluate


def random_fe(mesh: Mesh1D, rng: np.random.Generator, scale: float = 1.0) -> FeFunction:
    """FE function with independent normal coefficients."""
    return FeFunction(mesh, scale * rng.standard_normal(mesh.n_dofs))


def smooth_periodic(mesh: Mesh1D, rng: np.random.Generator, n_modes: int = 4) -> FeFunction:
    """Random low-frequency Fourier combination sampled at the nodes."""
    amps = rng.uniform(-1.0, 1.0, size=(n_modes, 2))
    x = mesh.dof_x
    values = np.zeros_like(x)
    for k in range(1, n_modes + 1):
        values += amps[k - 1, 0] * np.sin(2 * np.pi * k * x)
        values += amps[k - 1, 1] * np.cos(2 * np.pi * k * x)
    return FeFunction(mesh, values)


def fe_values_on_rule(f: FeFunction, n_points: int = 7):
    """(values, derivatives) of f at an n-point Gauss rule per element."""
    rule = QuadratureRule.gauss_legendre(n_points)
    return element_values(f, rule)


def integrate_elementwise(mesh: Mesh1D, pointwise: np.ndarray, n_points: int = 7) -> float:
    """Sum h * w_q * pointwise[e, q] over all elements."""
    rule = QuadratureRule.gauss_legendre(n_points)
    return float(mesh.h * np.einsum("q,eq->", rule.weights, pointwise))


def simpson_l2_error(f: FeFunction, g, n_sub: int = 4001) -> float:
    """Reference ||f - g|| by composite Simpson on a fine uniform grid."""
    mesh = f.mesh
    xs = np.linspace(mesh.x_left, mesh.x_right, n_sub)
    diff = np.asarray(evaluate(f, xs)) - np.asarray(g(xs))
    from scipy.integrate import simpson

    return float(np.sqrt(max(simpson(diff * diff, x=xs), 0.0)))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
