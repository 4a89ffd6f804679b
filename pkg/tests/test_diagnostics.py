"""
Tests pour les normes, énergies, moniteurs et inégalités.
"""

import numpy as np
import pytest

from src.diagnostics.inequalities import (
    hardy_check,
    hardy_constant,
    korn_check,
    korn_constant_study,
    lobatto_nodes,
)
from src.diagnostics.monitors import (
    apriori_drift,
    embedding_constant,
    entropy_field,
    eulerian_density,
    eulerian_pressure,
    interior_positivity,
    sound_speed,
    vacuum_boundary_monitor,
    vacuum_drift,
)
from src.diagnostics.norms import energy_E, energy_F, energy_report, norm_sq, sobolev_norm
from src.exceptions import GridMismatch, InsufficientHistory, NonPositiveState, TraceViolation, UnsupportedExponent
from src.models import PhysParams
from src.numerics.grid import Field, make_grid
from src.numerics.kinematics import compute_deformation, identity_flow_map, identity_positions
from src.solver.initial_data import initial_time_derivatives
from src.solver.trajectory import TimeGrid, Trajectory, constant_trajectory

TWO_PI = 2 * np.pi


def smooth_trajectory(grid, scale: float = 1.0) -> Trajectory:
    """v = s·t²·(sin 2πx₁, 0, x₃²), Θ = s·t·x₃(1 − x₃), η = Id."""
    tg = TimeGrid(0.4, 4)
    x1, _, x3 = grid.mesh()
    times = tg.times[:, None, None, None]
    v = np.zeros((tg.n_steps + 1, 3, *grid.shape))
    v[:, 0] = scale * times**2 * np.sin(TWO_PI * x1)
    v[:, 2] = scale * times**2 * x3**2
    theta = scale * times * (x3 * (1 - x3))
    eta = np.stack([identity_positions(grid)] * (tg.n_steps + 1))
    return Trajectory(tg, grid, eta, v, theta)


class TestSobolevNorms:
    """Normes H^k discrètes."""

    def test_fourier_mode_h1(self, grid):
        f = Field.from_function(grid, lambda x1, x2, x3: np.sin(TWO_PI * x1))
        assert norm_sq(f, 1) == pytest.approx(0.5 + TWO_PI**2 / 2, rel=1e-10)

    def test_mixed_derivatives_h2(self, grid):
        """sin 2πx₁ sin 2πx₂ : six multi-indices |β| ≤ 2, dont ∂₁∂₂."""
        f = Field.from_function(grid, lambda x1, x2, x3: np.sin(TWO_PI * x1) * np.sin(TWO_PI * x2))
        expected = (1 + 2 * TWO_PI**2 + 3 * TWO_PI**4) / 4
        assert norm_sq(f, 2) == pytest.approx(expected, rel=1e-10)

    def test_sine_mode_h2(self):
        g = make_grid(4, 4, 21)
        f = Field.from_function(g, lambda x1, x2, x3: np.sin(np.pi * x3))
        assert norm_sq(f, 2) == pytest.approx((1 + np.pi**2 + np.pi**4) / 2, rel=1e-8)

    def test_weighted_l2(self, grid):
        rho0 = Field.from_function(grid, lambda x1, x2, x3: x3 * (1 - x3))
        ones = Field.from_function(grid, lambda x1, x2, x3: 1.0)
        assert sobolev_norm(ones, 0, weight=rho0) == pytest.approx(np.sqrt(1 / 6), rel=1e-10)

    def test_homogeneity(self, grid):
        f = Field.from_function(grid, lambda x1, x2, x3: [x3**2, np.cos(TWO_PI * x2), 0.0])
        assert sobolev_norm(-3.0 * f, 2) == pytest.approx(3.0 * sobolev_norm(f, 2))

    def test_zero_trace_required(self, grid):
        with pytest.raises(TraceViolation):
            sobolev_norm(Field.from_function(grid, lambda x1, x2, x3: 1.0), 1, zero_trace=True)
        f = Field.from_function(grid, lambda x1, x2, x3: x3 * (1 - x3))
        assert sobolev_norm(f, 1, zero_trace=True) > 0

    @pytest.mark.parametrize("k", [-1, 4])
    def test_order_out_of_range(self, grid, k):
        with pytest.raises(ValueError):
            sobolev_norm(Field.zeros(grid), k)


class TestEnergy:
    """Fonctionnelles E et F."""

    def test_quadratic_scaling(self, grid):
        rho0 = Field.from_function(grid, lambda x1, x2, x3: x3 * (1 - x3))
        base = energy_E(smooth_trajectory(grid), 3, rho0)
        doubled = energy_E(smooth_trajectory(grid, 2.0), 3, rho0)
        assert doubled.total == pytest.approx(4.0 * base.total, rel=1e-10)
        assert base.theta_tt_weighted == pytest.approx(0.0, abs=1e-16)

    def test_initial_energy_matches_M0(self, vacuum_data, params, short_time_grid):
        derived = initial_time_derivatives(vacuum_data, params)
        traj = constant_trajectory(vacuum_data.grid, short_time_grid, vacuum_data.u0, vacuum_data.theta0, derived)
        assert energy_E(traj, 0, vacuum_data.rho0).total == pytest.approx(derived.M0 - 1.0, rel=1e-12)

    def test_initial_energy_needs_rates(self, vacuum_data, short_time_grid):
        traj = constant_trajectory(vacuum_data.grid, short_time_grid, vacuum_data.u0, vacuum_data.theta0)
        with pytest.raises(InsufficientHistory):
            energy_E(traj, 0, vacuum_data.rho0)

    def test_report_needs_rates(self, grid):
        rho0 = Field.from_function(grid, lambda x1, x2, x3: x3 * (1 - x3))
        with pytest.raises(InsufficientHistory):
            energy_report(smooth_trajectory(grid), rho0)

    def test_report_series(self, vacuum_data, params, short_time_grid):
        derived = initial_time_derivatives(vacuum_data, params)
        traj = constant_trajectory(vacuum_data.grid, short_time_grid, vacuum_data.u0, vacuum_data.theta0, derived)
        report = energy_report(traj, vacuum_data.rho0, derived.M0)
        assert len(report.entries) == len(report.F) == short_time_grid.n_steps + 1
        assert report.F[0] == pytest.approx(report.entries[0].total)
        assert report.F[2] == pytest.approx(energy_F(traj, 2, vacuum_data.rho0))
        assert all(f >= e.total for f, e in zip(report.F, report.entries))
        with pytest.raises(InsufficientHistory):
            energy_F(traj, 5, vacuum_data.rho0)


class TestEulerianQuantities:
    """Densité, pression, vitesse du son et entropie."""

    def test_density_and_pressure(self, grid, vacuum_data):
        d = compute_deformation(identity_flow_map(grid))
        rho = eulerian_density(vacuum_data.rho0, d)
        np.testing.assert_allclose(rho.scalar, vacuum_data.rho0.scalar, atol=1e-14)
        pressure = eulerian_pressure(rho, vacuum_data.theta0, PhysParams(R=2.0))
        np.testing.assert_allclose(pressure.scalar, 2.0 * vacuum_data.rho0.scalar**2, atol=1e-14)

    def test_density_grid_check(self, grid):
        d = compute_deformation(identity_flow_map(make_grid(4, 4, 5)))
        with pytest.raises(GridMismatch):
            eulerian_density(Field.zeros(grid), d)

    def test_sound_speed(self, grid):
        theta = Field(grid, np.full(grid.shape, 2.0))
        np.testing.assert_allclose(sound_speed(theta, PhysParams(gamma=2.0, R=1.0)).scalar, 2.0)
        np.testing.assert_array_equal(sound_speed(-1.0 * theta, PhysParams()).scalar, 0.0)

    def test_isentropic_state_has_flat_entropy(self, grid, vacuum_data):
        """Θ = 3ρ^{γ−1} : S = R/(γ−1)·ln 3 partout à l'intérieur."""
        p = PhysParams(gamma=2.0)
        theta = Field(grid, 3.0 * vacuum_data.rho0.scalar)
        entropy = entropy_field(theta, vacuum_data.rho0, p)
        np.testing.assert_allclose(entropy.S.scalar[1:-1], np.log(3.0), atol=1e-12)
        np.testing.assert_array_equal(entropy.S.scalar[0], 0.0)
        assert entropy.spread == pytest.approx(0.0, abs=1e-12)

    def test_entropy_needs_positive_state(self, vacuum_data, params):
        with pytest.raises(NonPositiveState):
            entropy_field(-1.0 * vacuum_data.theta0, vacuum_data.rho0, params)


class TestMonitors:
    """Condition de vide, positivité et dérives."""

    def test_vacuum_boundary_monitor(self, grid):
        record = vacuum_boundary_monitor(Field.from_function(grid, lambda x1, x2, x3: x3 * (1 - x3)))
        assert record.max == pytest.approx(-1.0, abs=1e-10)
        assert not record.violated
        flat = vacuum_boundary_monitor(Field.from_function(grid, lambda x1, x2, x3: (x3 * (1 - x3)) ** 2))
        assert flat.violated

    def test_interior_positivity(self, vacuum_data):
        record = interior_positivity(vacuum_data.theta0, vacuum_data.theta0)
        assert record.theta_min == pytest.approx(record.delta)
        assert not record.violated
        cooled = interior_positivity(0.4 * vacuum_data.theta0, vacuum_data.theta0)
        assert cooled.violated

    def test_interior_positivity_empty_region(self, vacuum_data):
        with pytest.raises(ValueError):
            interior_positivity(vacuum_data.theta0, vacuum_data.theta0, d0=0.3)

    def test_apriori_drift_for_shear(self, grid, vacuum_data, short_time_grid):
        u0 = Field.from_function(grid, lambda x1, x2, x3: [0.1 * x3, 0.0, 0.0])
        record = apriori_drift(constant_trajectory(grid, short_time_grid, u0, vacuum_data.theta0))
        assert record.holds
        assert len(record.times) == short_time_grid.n_steps + 1
        assert record.j_drift_measured[-1] == pytest.approx(0.0, abs=1e-12)

    def test_vacuum_drift_for_frozen_temperature(self, vacuum_data, short_time_grid):
        traj = constant_trajectory(vacuum_data.grid, short_time_grid, vacuum_data.u0, vacuum_data.theta0)
        record = vacuum_drift(traj)
        assert record.holds
        assert max(record.drift) == 0.0
        assert record.embedding_constant > 0

    def test_embedding_constant_of_zero(self, grid):
        assert embedding_constant(Field.zeros(grid)) == 1.0


class TestHardy:
    """Inégalité de Hardy à une dimension."""

    def test_constant_function(self):
        """g ≡ 1, k = 2 : lhs = 1, rhs = 1/3."""
        result = hardy_check(np.ones(17), 2.0)
        assert result.lhs == pytest.approx(1.0, rel=1e-10)
        assert result.ratio == pytest.approx(3.0, rel=1e-10)

    def test_linear_function(self):
        """g = s, k = 0 : rapport 1."""
        result = hardy_check(lobatto_nodes(16), 0.0)
        assert result.ratio == pytest.approx(1.0, rel=1e-10)

    def test_custom_nodes(self):
        nodes = np.linspace(0.0, 1.0, 9)
        assert hardy_check(np.ones(9), 2.0, nodes).ratio == pytest.approx(3.0, rel=1e-10)

    @pytest.mark.parametrize("k", [1.0, -1.0, -2.0])
    def test_unsupported_exponents(self, k):
        with pytest.raises(UnsupportedExponent):
            hardy_check(np.ones(5), k)

    def test_constant_bounds_random_polynomials(self, rng):
        bound = hardy_constant(8, 3.0)
        for _ in range(20):
            g = rng.standard_normal(9)
            assert hardy_check(g, 3.0).ratio <= bound * (1 + 1e-10)

    def test_constant_rejects_small_exponents(self):
        with pytest.raises(UnsupportedExponent):
            hardy_constant(4, 0.5)


class TestKorn:
    """Inégalité de Korn."""

    def test_linear_shear(self, grid):
        """v = (x₃, 0, 0) : lhs = 4/3, rhs = 7/3."""
        x3 = grid.mesh()[2]
        result = korn_check(Field(grid, np.stack([x3, np.zeros_like(x3), np.zeros_like(x3)])))
        assert result.lhs == pytest.approx(4 / 3, rel=1e-10)
        assert result.ratio == pytest.approx(4 / 7, rel=1e-10)

    def test_weighted_requires_density(self, grid):
        with pytest.raises(ValueError):
            korn_check(Field.zeros(grid, 3), weighted=True)

    def test_scalar_rejected(self, grid):
        with pytest.raises(GridMismatch):
            korn_check(Field.zeros(grid))

    def test_constant_study(self, grid):
        rows = korn_constant_study(grid, [0.5, 1.0, 2.0], samples=5, seed=3)
        assert [row.alpha for row in rows] == [0.5, 1.0, 2.0]
        assert all(row.samples == 5 and row.max_ratio > 0 for row in rows)
        assert korn_constant_study(grid, [1.0], samples=5, seed=3)[0] == rows[1]
