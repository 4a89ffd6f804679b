"""
Tests pour la lecture et la validation des configurations.
"""

import pytest

from src.exceptions import ConfigurationError, ConfigValidationError, ParseError
from src.models import TimeScheme
from src.pipeline.config_loader import (
    config_digest,
    config_from_mapping,
    config_from_text,
    load_config,
    parse_config_text,
)


class TestParseConfigText:
    """Découpage `clé = valeur`."""

    def test_nested_sections(self):
        tree = parse_config_text("grid.n1 = 8\ngrid.n3 = 9\nphysics.mu = 2.0\n")
        assert tree == {"grid": {"n1": "8", "n3": "9"}, "physics": {"mu": "2.0"}}

    def test_comments_and_blank_lines(self):
        tree = parse_config_text("# entête\n\ngrid.n1 = 8   # commentaire\n   \n")
        assert tree == {"grid": {"n1": "8"}}

    def test_missing_equals_reports_line(self):
        with pytest.raises(ParseError) as exc_info:
            parse_config_text("grid.n1 = 8\n\ngrid.n2 8\n")
        assert exc_info.value.line == 3
        assert "ligne 3" in str(exc_info.value)

    @pytest.mark.parametrize("text", ["grid..n1 = 8", "1grid = 3", "grid.n1 =", "grid-n1 = 4"])
    def test_malformed_lines(self, text):
        with pytest.raises(ParseError):
            parse_config_text(text)

    def test_duplicate_key(self):
        with pytest.raises(ParseError, match="définie deux fois") as exc_info:
            parse_config_text("grid.n1 = 8\ngrid.n1 = 16\n")
        assert exc_info.value.line == 2

    def test_value_and_section_clash(self):
        with pytest.raises(ParseError):
            parse_config_text("grid = 8\ngrid.n1 = 16\n")

    def test_profile_parameters_routed(self):
        tree = parse_config_text(
            "initial.temperature.name = distance\ninitial.temperature.amplitude = 2.5\ninitial.density.alpha = 1.5\n"
        )
        assert tree["initial"]["temperature"] == {"name": "distance", "params": {"amplitude": "2.5"}}
        assert tree["initial"]["density"] == {"alpha": "1.5"}


class TestValidation:
    """Validation par RunConfig."""

    def test_minimal_file_defaults(self, data_dir):
        cfg = load_config(data_dir / "minimal.cfg")
        assert cfg.grid.n3 == 9
        assert cfg.basis.m == 2
        assert cfg.basis.m3 is None
        assert cfg.time.scheme is TimeScheme.CRANK_NICOLSON
        assert cfg.picard.tol == 1e-8
        assert cfg.physics.gamma == 2.0
        assert cfg.initial.validate_data

    def test_gamma_must_exceed_one(self, data_dir):
        with pytest.raises(ConfigValidationError, match="gamma must exceed 1"):
            load_config(data_dir / "gamma_invalid.cfg")

    def test_viscosity_boundary_rejected(self, data_dir):
        """2μ + 3λ = 0 est exclu."""
        with pytest.raises(ConfigValidationError, match="2\\*mu \\+ 3\\*lambda"):
            load_config(data_dir / "viscosity_boundary.cfg")

    def test_even_n3_rejected(self, data_dir):
        with pytest.raises(ConfigurationError) as exc_info:
            load_config(data_dir / "bad_n3.cfg")
        assert exc_info.value.exit_code == 2

    def test_unknown_key(self):
        with pytest.raises(ConfigValidationError, match="grid.n4"):
            config_from_text("grid.n4 = 8\n")

    @pytest.mark.parametrize(
        "label, scheme",
        [("be", TimeScheme.BACKWARD_EULER), ("Crank-Nicolson", TimeScheme.CRANK_NICOLSON), ("cn", TimeScheme.CRANK_NICOLSON)],
    )
    def test_scheme_aliases(self, label, scheme):
        assert config_from_text(f"time.scheme = {label}\n").time.scheme is scheme

    def test_unknown_scheme(self):
        with pytest.raises(ConfigValidationError):
            config_from_text("time.scheme = rk4\n")

    def test_validation_bypass(self, data_dir):
        cfg = load_config(data_dir / "zero_bypass.cfg")
        assert cfg.initial.validate_data is False
        assert cfg.initial.temperature.name == "zero"
        assert cfg.time.n_steps == 4

    def test_profile_params_converted(self):
        cfg = config_from_text("initial.temperature.name = distance\ninitial.temperature.amplitude = 2.5\n")
        assert cfg.initial.temperature.params == {"amplitude": 2.5}

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="illisible"):
            load_config(tmp_path / "absent.cfg")

    def test_parse_error_from_file(self, tmp_path):
        path = tmp_path / "broken.cfg"
        path.write_text("grid.n1 = 8\nceci n'est pas une ligne\n", encoding="utf-8")
        with pytest.raises(ParseError) as exc_info:
            load_config(path)
        assert exc_info.value.line == 2


class TestMappingAndDigest:
    """Configuration depuis un objet JSON et empreinte."""

    def test_mapping_matches_text(self, data_dir):
        text_cfg = load_config(data_dir / "minimal.cfg")
        mapping_cfg = config_from_mapping({"grid.n1": 8, "grid.n2": 8, "grid.n3": 9, "basis.m": 2})
        assert mapping_cfg == text_cfg
        assert config_digest(mapping_cfg) == config_digest(text_cfg)

    def test_mapping_rejects_bad_key(self):
        with pytest.raises(ParseError):
            config_from_mapping({"grid n1": 8})

    def test_digest_changes_with_content(self):
        a = config_from_text("time.T = 0.01\n")
        b = config_from_text("time.T = 0.02\n")
        assert config_digest(a) != config_digest(b)
        assert len(config_digest(a)) == 64
