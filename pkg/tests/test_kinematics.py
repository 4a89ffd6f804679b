"""
Tests pour la cinématique lagrangienne.
"""

import numpy as np
import pytest

from src.exceptions import DegenerateJacobian, NonFiniteState
from src.numerics.grid import Field, make_grid
from src.numerics.kinematics import (
    FlowMap,
    advance_flow_map,
    as_matrix,
    check_apriori,
    cofactor_matrix,
    compute_deformation,
    deformation_rates,
    identity_flow_map,
    identity_positions,
    piola_residual,
)
from src.pipeline.verification import check_piola_and_cofactor, random_displacement


def flow_from_displacement(grid, func) -> FlowMap:
    displacement = np.stack([np.broadcast_to(c, grid.shape) for c in func(*grid.mesh())])
    return FlowMap(Field(grid, identity_positions(grid) + displacement))


def perturbed_flow(grid) -> FlowMap:
    """η = Id + 0.01·(sin 2πx₂, 0, x₃(1 − x₃))."""
    return flow_from_displacement(grid, lambda x1, x2, x3: [0.01 * np.sin(2 * np.pi * x2), 0.0, 0.01 * x3 * (1 - x3)])


class TestFlowMap:
    """Tests du flot et de son transport."""

    def test_identity(self, grid):
        m = identity_flow_map(grid)
        assert m.time == 0.0
        np.testing.assert_allclose(m.eta.values, np.stack(grid.mesh()), atol=1e-14)

    def test_frozen_linear_velocity(self, grid):
        """v = (x₃, 0, 0), dt = 0.1 → η¹ = x₁ + 0.1·x₃."""
        x1, x2, x3 = grid.mesh()
        v = Field(grid, np.stack([x3, np.zeros_like(x3), np.zeros_like(x3)]))
        m = advance_flow_map(identity_flow_map(grid), v, 0.1)
        np.testing.assert_allclose(m.eta.values[0], x1 + 0.1 * x3, atol=1e-12)
        np.testing.assert_allclose(m.eta.values[2], x3, atol=1e-12)
        assert m.time == pytest.approx(0.1)

    def test_time_dependent_velocity(self, grid):
        """v(t) = t·e₃ : η³ = x₃ + dt²/2 exactement par RK4."""
        ones = np.ones(grid.shape)

        def v(t):
            return Field(grid, np.stack([0 * ones, 0 * ones, t * ones]))

        m = advance_flow_map(identity_flow_map(grid), v, 0.2)
        np.testing.assert_allclose(m.eta.values[2], grid.mesh()[2] + 0.02, atol=1e-12)

    def test_non_positive_dt(self, grid):
        with pytest.raises(ValueError):
            advance_flow_map(identity_flow_map(grid), Field.zeros(grid, 3), 0.0)

    def test_overflowing_flow(self, grid):
        v = Field(grid, np.full((3, *grid.shape), 1e308))
        with pytest.raises(NonFiniteState), np.errstate(over="ignore"):
            advance_flow_map(identity_flow_map(grid), v, 1.0)


class TestDeformation:
    """Tests du triplet (A, J, a)."""

    def test_identity_deformation(self, grid):
        d = compute_deformation(identity_flow_map(grid))
        eye = np.eye(3)[:, :, None, None, None]
        np.testing.assert_allclose(d.J.scalar, 1.0, atol=1e-12)
        np.testing.assert_allclose(d.A_matrix, np.broadcast_to(eye, d.A_matrix.shape), atol=1e-12)
        np.testing.assert_allclose(d.a_matrix, np.broadcast_to(eye, d.a_matrix.shape), atol=1e-12)

    def test_cofactor_is_J_times_inverse(self, grid):
        d = compute_deformation(perturbed_flow(grid))
        np.testing.assert_allclose(d.a_matrix, d.J.scalar * d.A_matrix, atol=1e-10)

    def test_cofactor_oracle(self, grid):
        """a coïncide avec les mineurs 2×2 de Dη."""
        d = compute_deformation(perturbed_flow(grid))
        np.testing.assert_allclose(d.a.values, cofactor_matrix(d.Deta).values, atol=1e-8)

    def test_cofactor_times_gradient(self, grid):
        """a·Dη = J·I en tout nœud."""
        d = compute_deformation(perturbed_flow(grid))
        product = np.einsum("kixyz,ijxyz->kjxyz", d.a_matrix, d.Deta_matrix)
        expected = d.J.scalar * np.eye(3)[:, :, None, None, None]
        np.testing.assert_allclose(product, expected, atol=1e-8)

    def test_degenerate_jacobian(self, grid):
        """η³ ≡ 0 : J = 0."""
        m = flow_from_displacement(grid, lambda x1, x2, x3: [0.0, 0.0, -x3])
        with pytest.raises(DegenerateJacobian):
            compute_deformation(m)

    def test_tensor_layout(self, grid):
        """Composante 3·r + c = entrée [r, c]."""
        m = flow_from_displacement(grid, lambda x1, x2, x3: [0.1 * x3, 0.0, 0.0])
        d = compute_deformation(m)
        np.testing.assert_allclose(d.Deta.values[2], 0.1, atol=1e-12)
        np.testing.assert_allclose(as_matrix(d.Deta.values)[0, 2], 0.1, atol=1e-12)


class TestPiola:
    """Identité de Piola aᵏᵢ,ₖ = 0."""

    def test_linear_flow(self, grid):
        m = flow_from_displacement(grid, lambda x1, x2, x3: [0.1 * x3, 0.0, 0.05 * x3])
        residual = piola_residual(compute_deformation(m))
        np.testing.assert_allclose(residual.values, 0.0, atol=1e-12)

    def test_smooth_perturbation(self):
        g = make_grid(32, 32, 33)
        residual = piola_residual(compute_deformation(perturbed_flow(g)))
        assert np.abs(residual.values).max() <= 1e-8

    def test_random_flows(self, grid, rng):
        for _ in range(5):
            displacement = random_displacement(grid, rng)
            d = compute_deformation(FlowMap(Field(grid, identity_positions(grid) + displacement)))
            assert np.abs(piola_residual(d).values).max() <= 1e-8

    def test_verification_uses_reference_grid(self):
        """La vérification tire ses flots sur la grille 32×32×33, quelle que soit la configuration."""
        results = check_piola_and_cofactor(samples=2)
        assert [r.name for r in results] == ["piola_identity", "cofactor_consistency"]
        assert all(r.passed for r in results)
        assert all("32×32×33" in r.detail for r in results)


class TestDeformationRates:
    """J_t et a_t contre des différences finies centrées en temps."""

    def test_rates_match_finite_differences(self, grid, rng):
        start = FlowMap(Field(grid, identity_positions(grid) + random_displacement(grid, rng)))
        v = Field(grid, random_displacement(grid, rng))
        t, h = 0.1, 1e-4

        def state(time):
            return compute_deformation(advance_flow_map(start, v, time))

        j_t, a_t = deformation_rates(state(t), v)
        j_fd = (state(t + h).J.scalar - state(t - h).J.scalar) / (2 * h)
        a_fd = (state(t + h).a.values - state(t - h).a.values) / (2 * h)
        assert np.abs(j_t.scalar - j_fd).max() <= 1e-6 * max(1.0, np.abs(j_fd).max())
        assert np.abs(a_t.values - a_fd).max() <= 1e-6 * max(1.0, np.abs(a_fd).max())

    def test_zero_velocity(self, grid):
        d = compute_deformation(perturbed_flow(grid))
        j_t, a_t = deformation_rates(d, Field.zeros(grid, 3))
        np.testing.assert_array_equal(j_t.scalar, 0.0)
        np.testing.assert_array_equal(a_t.values, 0.0)


class TestApriori:
    """Hypothèse a priori sur J et Dη."""

    def test_identity_passes(self, grid):
        check = check_apriori(compute_deformation(identity_flow_map(grid)))
        assert check.ok
        assert check.deta_max == pytest.approx(1.0)
        assert check.deta_bound == 2.0

    def test_stretch_violates_jacobian_bound(self, grid):
        m = flow_from_displacement(grid, lambda x1, x2, x3: [0.0, 0.0, 0.8 * x3])
        check = check_apriori(compute_deformation(m))
        assert not check.ok
        assert check.j_max == pytest.approx(1.8)

    def test_gradient_bound(self, grid):
        """Cisaillement de pente 3 : J = 1 mais |Dη| = 3 > 2."""
        m = flow_from_displacement(grid, lambda x1, x2, x3: [3.0 * x3, 0.0, 0.0])
        check = check_apriori(compute_deformation(m))
        assert check.j_min == pytest.approx(1.0)
        assert not check.ok
        assert check_apriori(compute_deformation(m), deta_bound=3.5).ok

    def test_bound_from_settings(self, grid, monkeypatch):
        from src.config import get_settings

        monkeypatch.setenv("DETA_BOUND", "0.5")
        get_settings.cache_clear()
        check = check_apriori(compute_deformation(identity_flow_map(grid)))
        assert check.deta_bound == 0.5
        assert not check.ok
