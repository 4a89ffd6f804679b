"""
Tests pour les données initiales et le registre de profils.
"""

from unittest.mock import patch

import numpy as np
import pytest

from src.diagnostics.norms import norm_sq
from src.exceptions import (
    ConfigValidationError,
    DecayViolation,
    UnboundedDerivative,
    VacuumConditionViolation,
)
from src.models import PhysParams, RunConfig
from src.numerics.grid import Field, diff, make_grid
from src.solver.initial_data import (
    InitialData,
    build_density,
    build_initial_data,
    build_temperature,
    check_compatibility,
    compute_M0,
    divide_by_density,
    estimate_decay_exponent,
    initial_time_derivatives,
)
from src.solver.profiles import TEMPERATURE_PROFILES, VELOCITY_PROFILES, distance, resolve_profile


class TestDensity:
    """Tests de ρ₀ = enveloppe · d^α."""

    def test_vanishes_on_boundary(self, grid):
        rho0, _ = build_density(grid, 1.0)
        np.testing.assert_array_equal(rho0.scalar[0], 0.0)
        np.testing.assert_array_equal(rho0.scalar[-1], 0.0)
        assert rho0.scalar[1:-1].min() > 0

    def test_face_slope_for_linear_decay(self, grid):
        """α = 1 : ∂₃ρ₀ = ±1 sur les faces."""
        rho0, _ = build_density(grid, 1.0)
        slope = diff(rho0, 3).scalar
        np.testing.assert_allclose(slope[0], 1.0, atol=1e-10)
        np.testing.assert_allclose(slope[-1], -1.0, atol=1e-10)

    @pytest.mark.parametrize("alpha", [0.0, -0.5])
    def test_decay_violation(self, grid, alpha):
        with pytest.raises(DecayViolation):
            build_density(grid, alpha)

    def test_decay_exponent_estimate(self):
        g = make_grid(4, 4, 33)
        rho0, norms = build_density(g, 1.5)
        assert estimate_decay_exponent(rho0) == pytest.approx(1.5, abs=1e-8)
        assert norms.meets_sufficient_decay

    def test_slow_decay_reported(self, grid):
        _, norms = build_density(grid, 0.5)
        assert norms.meets_sufficient_decay is False
        assert norms.linf > 0

    def test_non_positive_envelope(self, grid):
        with pytest.raises(ConfigValidationError):
            build_density(grid, 1.0, envelope=-1.0)


class TestTemperature:
    """Condition de vide physique ∇ₙθ₀ < 0."""

    def test_distance_profile(self, grid):
        theta0, record = build_temperature(grid, lambda x1, x2, x3: distance(x3))
        assert record.min == pytest.approx(-1.0, abs=1e-10)
        assert record.max == pytest.approx(-1.0, abs=1e-10)
        assert not record.violated
        np.testing.assert_array_equal(theta0.scalar[0], 0.0)

    def test_sine_profile(self):
        g = make_grid(4, 4, 17)
        _, record = build_temperature(g, lambda x1, x2, x3: np.sin(np.pi * x3))
        assert record.max == pytest.approx(-np.pi, rel=1e-8)

    @pytest.mark.parametrize(
        "profile",
        [
            lambda x1, x2, x3: distance(x3) ** 2,
            lambda x1, x2, x3: x3**2 * (1 - x3),
        ],
    )
    def test_degenerate_normal_derivative(self, grid, profile):
        with pytest.raises(VacuumConditionViolation):
            build_temperature(grid, profile)

    def test_negative_interior_rejected(self, grid, vacuum_data):
        with pytest.raises(ConfigValidationError):
            InitialData(
                rho0=vacuum_data.rho0,
                u0=vacuum_data.u0,
                theta0=Field(grid, -vacuum_data.theta0.scalar),
                alpha=1.0,
            )

    def test_unvalidated_mode_accepts_anything(self, grid, vacuum_data):
        data = InitialData(
            rho0=vacuum_data.rho0,
            u0=vacuum_data.u0,
            theta0=Field.zeros(grid),
            alpha=1.0,
            validated=False,
        )
        assert not data.validated


class TestInitialTimeDerivatives:
    """u₀ₜ, θ₀ₜ et M₀ pour ρ₀ = θ₀ = d, u₀ = 0."""

    def test_velocity_rate(self, vacuum_data, params):
        """u₀ₜ = −∇(ρ₀θ₀)/ρ₀ = −2∇d."""
        derived = initial_time_derivatives(vacuum_data, params)
        x3 = vacuum_data.grid.mesh()[2]
        np.testing.assert_allclose(derived.u0t.values[2], -2.0 * (1 - 2 * x3), atol=1e-8)
        np.testing.assert_allclose(derived.u0t.values[:2], 0.0, atol=1e-8)

    def test_temperature_rate(self, vacuum_data, params):
        """θ₀ₜ = κΔθ₀/(c_vρ₀) = −2/d à l'intérieur."""
        derived = initial_time_derivatives(vacuum_data, params)
        x3 = vacuum_data.grid.mesh()[2][1:-1]
        np.testing.assert_allclose(derived.theta0t.scalar[1:-1], -2.0 / (x3 * (1 - x3)), rtol=1e-8)

    def test_M0_sums_six_norms(self, vacuum_data, params):
        derived = initial_time_derivatives(vacuum_data, params)
        assert derived.M0 == pytest.approx(compute_M0(derived, vacuum_data))
        assert derived.M0 > 1.0

    def test_sine_mode_norm(self):
        """ρ₀ ≡ 1, θ₀ = sin(πx₃) : ∥θ₀∥²_{H³} = (1 + π² + π⁴ + π⁶)/2."""
        g = make_grid(4, 4, 21)
        data = InitialData(
            rho0=Field(g, np.ones(g.shape)),
            u0=Field.zeros(g, 3),
            theta0=Field.from_function(g, lambda x1, x2, x3: np.sin(np.pi * x3)),
            alpha=1.0,
            validated=False,
        )
        h3 = norm_sq(data.theta0, 3)
        assert h3 == pytest.approx((1 + np.pi**2 + np.pi**4 + np.pi**6) / 2, rel=1e-7)
        derived = initial_time_derivatives(data, PhysParams())
        assert derived.M0 >= 1.0 + h3

    def test_unbounded_velocity_acceleration(self, vacuum_data, params):
        """Un u₀ₜₜ démesuré est refusé avant le calcul de M₀."""
        huge = np.full((3, *vacuum_data.grid.shape), 1e20)
        with patch("src.solver.initial_data.momentum_forcing_rate", return_value=huge):
            with pytest.raises(UnboundedDerivative, match="u₀ₜₜ"):
                initial_time_derivatives(vacuum_data, params)

    def test_non_finite_temperature_acceleration(self, vacuum_data, params):
        bad = np.full(vacuum_data.grid.shape, np.nan)
        with patch("src.solver.initial_data.temperature_forcing_rate", return_value=bad):
            with pytest.raises(UnboundedDerivative, match="θ₀ₜₜ"):
                initial_time_derivatives(vacuum_data, params)

    def test_unbounded_quotient(self, grid):
        rho = np.ones(grid.shape)
        rho[4, 2, 2] = 0.0
        with pytest.raises(UnboundedDerivative):
            divide_by_density(grid, np.ones(grid.shape), Field(grid, rho))


class TestCompatibility:
    """Conditions de compatibilité : résidus par condition."""

    def _data(self, grid, velocity: str) -> InitialData:
        rho0, _ = build_density(grid, 1.0)
        theta0, _ = build_temperature(grid, lambda x1, x2, x3: distance(x3))
        u0 = Field.from_function(grid, resolve_profile(VELOCITY_PROFILES, velocity))
        return InitialData(rho0=rho0, u0=u0, theta0=theta0, alpha=1.0)

    def test_shear_flags_traction(self, grid, params):
        data = self._data(grid, "shear")
        report = check_compatibility(data, initial_time_derivatives(data, params), p=params)
        assert report.residuals["stress_u0"] == pytest.approx(params.mu, abs=1e-10)
        assert "stress_u0" in report.failed
        assert not report.passed

    def test_compatible_shear(self, grid, params):
        data = self._data(grid, "compatible_shear")
        report = check_compatibility(data, initial_time_derivatives(data, params), p=params)
        assert report.residuals["stress_u0"] <= 1e-8
        assert report.residuals["stress_tangential_u0"] <= 1e-8
        assert report.residuals["theta0_trace"] == 0.0
        assert "stress_u0" not in report.failed


class TestProfiles:
    """Tests du registre de profils."""

    def test_unknown_profile(self):
        with pytest.raises(ConfigValidationError, match="profil inconnu"):
            resolve_profile(TEMPERATURE_PROFILES, "gaussian")

    def test_unknown_parameter(self):
        with pytest.raises(ConfigValidationError, match="paramètres inconnus"):
            resolve_profile(TEMPERATURE_PROFILES, "distance", {"beta": 1.0})

    def test_parameters_bound(self, grid):
        profile = resolve_profile(TEMPERATURE_PROFILES, "Distance", {"amplitude": 3.0})
        values = Field.from_function(grid, profile).scalar
        np.testing.assert_allclose(values, 3.0 * distance(grid.mesh()[2]))


class TestBuildFromConfig:
    """Construction depuis RunConfig."""

    def test_defaults(self):
        cfg = RunConfig.model_validate({"grid": {"n1": 8, "n2": 8, "n3": 9}})
        data = build_initial_data(cfg)
        assert data.validated
        assert data.alpha == 1.0
        assert data.density_norms is not None
        assert not data.normal_derivative.violated

    def test_zero_bypass(self):
        cfg = RunConfig.model_validate(
            {
                "grid": {"n1": 8, "n2": 8, "n3": 9},
                "initial": {"validate": False, "temperature": {"name": "zero"}},
            }
        )
        data = build_initial_data(cfg)
        assert not data.validated
        assert data.normal_derivative.violated
        np.testing.assert_array_equal(data.theta0.scalar, 0.0)
