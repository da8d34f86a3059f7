import numpy as np
import pytest

from lwrfem.filtering import (
    NegativeChiError,
    apply_filter,
    build_filter_context,
    deconvolve,
    fluctuation,
    stabilization_matrix,
)
from lwrfem.mesh import PERIODIC, FeFunction, build_mesh, l2_project
from lwrfem.operators import assemble
from lwrfem.stepping import mass_norm
from conftest import fe_values_on_rule, integrate_elementwise, random_fe


@pytest.fixture(scope="module")
def setup():
    mesh = build_mesh(0.0, 1.0, 32, 1, PERIODIC)
    ops = assemble(mesh)
    ctx = build_filter_context(ops, delta=np.sqrt(mesh.h), deconv_order=1)
    return mesh, ops, ctx


class TestFilterMatrix:
    def test_defining_equation(self, setup):
        mesh, ops, ctx = setup
        lhs = (ops.mass + ctx.delta**2 * ops.stiffness) @ ctx.filter_matrix
        assert np.abs(lhs - ops.mass).max() <= 1e-10 * np.abs(ops.mass).max()

    def test_fluctuation_kills_constants(self, setup):
        mesh, ops, ctx = setup
        assert np.abs(ctx.fluctuation_matrix @ np.ones(mesh.n_dofs)).max() < 1e-12

    def test_stabilization_base_symmetric_psd(self, setup, rng):
        mesh, ops, ctx = setup
        base = ctx.stabilization_base
        assert np.abs(base - base.T).max() < 1e-12
        for _ in range(100):
            x = rng.standard_normal(mesh.n_dofs)
            assert x @ (base @ x) >= -1e-12 * (x @ x)

    def test_invalid_build_arguments(self, setup):
        _, ops, _ = setup
        with pytest.raises(ValueError):
            build_filter_context(ops, delta=-0.1, deconv_order=0)
        with pytest.raises(ValueError):
            build_filter_context(ops, delta=0.1, deconv_order=-1)


class TestApplyFilter:
    def test_preserves_constants_periodic(self, setup):
        mesh, ops, ctx = setup
        c = FeFunction(mesh, np.full(mesh.n_dofs, 3.2))
        assert np.abs(apply_filter(ctx, c).coefficients - 3.2).max() < 1e-12

    def test_zero_radius_is_identity(self, setup, rng):
        mesh, ops, _ = setup
        ctx0 = build_filter_context(ops, delta=0.0, deconv_order=1)
        u = random_fe(mesh, rng)
        assert np.abs(apply_filter(ctx0, u).coefficients - u.coefficients).max() < 1e-11

    def test_sine_mode_attenuation_matches_symbol(self):
        # dense-solve path against the continuous transfer factor 1/(1 + delta^2 (2 pi)^2)
        mesh = build_mesh(0.0, 1.0, 64, 1, PERIODIC)
        ops = assemble(mesh)
        ctx = build_filter_context(ops, delta=0.1, deconv_order=0)
        u = l2_project(lambda x: np.sin(2 * np.pi * x), mesh)
        ubar = apply_filter(ctx, u)
        assert mass_norm(ubar, ops) < mass_norm(u, ops)
        symbol = 1.0 / (1.0 + ctx.delta**2 * (2 * np.pi) ** 2)
        diff = FeFunction(mesh, ubar.coefficients - symbol * u.coefficients)
        assert mass_norm(diff, ops) <= 0.01 * mass_norm(u, ops)

    def test_contractive_in_mass_norm(self, setup, rng):
        mesh, ops, ctx = setup
        for _ in range(100):
            u = random_fe(mesh, rng)
            assert mass_norm(apply_filter(ctx, u), ops) <= mass_norm(u, ops) * (1 + 1e-12)


class TestDeconvolve:
    def test_order_zero_is_identity(self, setup, rng):
        mesh, ops, _ = setup
        ctx0 = build_filter_context(ops, delta=0.2, deconv_order=0)
        u = random_fe(mesh, rng)
        assert np.allclose(deconvolve(ctx0, u).coefficients, u.coefficients, atol=1e-14)

    def test_order_one_expansion(self, setup, rng):
        # D_1 ubar = 2 ubar - filter(ubar)
        mesh, ops, ctx = setup
        ubar = random_fe(mesh, rng)
        expected = 2.0 * ubar.coefficients - apply_filter(ctx, ubar).coefficients
        assert np.allclose(deconvolve(ctx, ubar).coefficients, expected, atol=1e-12)

    @pytest.mark.parametrize("order", [0, 1, 2, 3])
    def test_constants_fixed_for_any_order(self, setup, order):
        mesh, ops, _ = setup
        ctx = build_filter_context(ops, delta=0.3, deconv_order=order)
        c = FeFunction(mesh, np.full(mesh.n_dofs, -1.1))
        assert np.abs(deconvolve(ctx, c).coefficients + 1.1).max() < 1e-11


class TestFluctuation:
    def test_constants_give_zero(self, setup):
        mesh, ops, ctx = setup
        c = FeFunction(mesh, np.full(mesh.n_dofs, 5.0))
        assert np.abs(fluctuation(ctx, c).coefficients).max() < 1e-11

    def test_zero_radius_gives_zero(self, setup, rng):
        mesh, ops, _ = setup
        ctx0 = build_filter_context(ops, delta=0.0, deconv_order=2)
        u = random_fe(mesh, rng)
        assert np.abs(fluctuation(ctx0, u).coefficients).max() < 1e-10

    def test_matrix_and_operator_paths_agree(self, setup, rng):
        mesh, ops, ctx = setup
        for _ in range(10):
            u = random_fe(mesh, rng)
            via_ops = fluctuation(ctx, u).coefficients
            via_matrix = ctx.fluctuation_matrix @ u.coefficients
            assert np.abs(via_ops - via_matrix).max() < 1e-11

    def test_linearity(self, setup, rng):
        mesh, ops, ctx = setup
        u, v = random_fe(mesh, rng), random_fe(mesh, rng)
        a, b = 0.7, -1.3
        combo = FeFunction(mesh, a * u.coefficients + b * v.coefficients)
        expected = (
            a * fluctuation(ctx, u).coefficients + b * fluctuation(ctx, v).coefficients
        )
        assert np.abs(fluctuation(ctx, combo).coefficients - expected).max() < 1e-12

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_higher_deconvolution_reduces_smooth_fluctuation(self, k):
        mesh = build_mesh(0.0, 1.0, 32, 1, PERIODIC)
        ops = assemble(mesh)
        u = l2_project(lambda x: np.sin(2 * np.pi * k * x), mesh)
        norms = []
        for order in (0, 1):
            ctx = build_filter_context(ops, delta=np.sqrt(mesh.h), deconv_order=order)
            norms.append(mass_norm(fluctuation(ctx, u), ops))
        assert norms[1] <= norms[0]


class TestStabilizationMatrix:
    def test_zero_chi_gives_zero_matrix(self, setup):
        _, _, ctx = setup
        assert np.abs(stabilization_matrix(ctx, 0.0)).max() == 0.0

    def test_negative_chi_rejected(self, setup):
        _, _, ctx = setup
        with pytest.raises(NegativeChiError):
            stabilization_matrix(ctx, -1.0)

    def test_quadratic_form_matches_fluctuation_gradient_norm(self, setup, rng):
        # oracle: quadrature of |d/dx fluctuation(u)|^2 via the operator path
        mesh, ops, ctx = setup
        chi = 0.8
        stab = stabilization_matrix(ctx, chi)
        for _ in range(10):
            u = random_fe(mesh, rng)
            star = fluctuation(ctx, u)
            _, dstar = fe_values_on_rule(star)
            expected = chi * ctx.delta**2 * integrate_elementwise(mesh, dstar * dstar)
            value = u.coefficients @ (stab @ u.coefficients)
            assert value == pytest.approx(expected, rel=1e-10)
