"""
Unit Tests for Config Loader
Tests lab settings, environment references and run config validation
"""

import json
import pytest
import sys
import os
from unittest.mock import patch

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config_loader import LabSettings, build_run_config, load_settings, parse_config
from lab_errors import ConfigError, ValidationError
from result_writer import config_hash


@pytest.mark.unit
class TestLoadSettings:
    """Test suite for load_settings"""

    @pytest.fixture
    def settings_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({
            "limits": {"max_level": 10},
            "estimators": {"headline_fraction": 0.5},
            "threads": "ENV:MORAN_THREADS",
        }))
        return path

    # ========================================
    # LOADING TESTS
    # ========================================

    def test_env_reference(self, settings_file):
        """Test that ENV: values are read from the environment"""
        with patch.dict(os.environ, {"MORAN_THREADS": "3"}):
            settings = load_settings(settings_file)
        assert settings.threads == 3
        assert settings.max_level == 10
        assert settings.headline_fraction == 0.5

    def test_env_reference_unset(self, settings_file):
        """Test that an unset variable falls back to the core count"""
        with patch.dict(os.environ, {}, clear=True), \
                patch("config_loader.psutil.cpu_count", return_value=6):
            settings = load_settings(settings_file)
        assert settings.threads == 6

    def test_missing_file_uses_defaults(self, tmp_path):
        """Test defaults when no settings file exists"""
        settings = load_settings(tmp_path / "absent.json")
        assert settings.max_level == 12
        assert settings.fourier_truncation == 40
        assert settings.threads >= 1

    def test_invalid_json(self, tmp_path):
        """Test that broken JSON is a config error"""
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_settings(path)

    def test_unknown_setting(self, tmp_path):
        """Test that unknown keys are reported with their section"""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"limits": {"bogus": 1}}))
        with pytest.raises(ConfigError) as exc:
            load_settings(path)
        assert exc.value.field_path == "limits.bogus"

    def test_thread_count_positive(self, tmp_path):
        """Test that threads must be at least 1"""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"threads": 0}))
        with pytest.raises(ConfigError):
            load_settings(path)

    def test_updated_type_check(self):
        """Test that overrides are type-checked"""
        assert LabSettings().updated({"max_level": 14}).max_level == 14
        with pytest.raises(ConfigError) as exc:
            LabSettings().updated({"max_level": "deep"})
        assert exc.value.field_path == "limits.max_level"


@pytest.mark.unit
class TestRunConfig:
    """Test suite for build_run_config and parse_config"""

    @pytest.fixture
    def settings(self):
        return LabSettings(threads=1)

    # ========================================
    # DEFAULT FILLING TESTS
    # ========================================

    def test_minimal_dims(self, settings):
        """Test that dims gets the validation depth as default"""
        config = build_run_config({"system": {"preset": "cantor"}, "command": "dims"}, settings)
        assert config.parameters["depth"] == 64
        assert config.system.b(1) == 4

    def test_spectrum_defaults(self, settings):
        """Test level defaults for canonical and index defaults otherwise"""
        canonical = build_run_config({"system": {"preset": "cantor"}, "command": "spectrum-gen"},
                                     settings)
        assert canonical.parameters["level"] == 8
        lacunary = build_run_config({"system": {"preset": "cantor"}, "command": "spectrum-gen",
                                     "parameters": {"kind": "lacunary"}}, settings)
        assert lacunary.parameters["max_index"] == 2000

    def test_target_normalized(self, settings):
        """Test that decimal targets are stored exactly"""
        config = build_run_config({
            "system": {"preset": "cantor"},
            "command": "spectrum-gen",
            "parameters": {"kind": "intermediate", "t": "0.25"},
        }, settings)
        assert config.parameters["t"] == "1/4"

    def test_explicit_system_echo(self, settings):
        """Test that explicit systems are echoed in normalized form"""
        config = build_run_config({
            "system": {"b": {"kind": "periodic", "values": [4, 6]},
                       "q": {"kind": "periodic", "values": [2, 3]}},
            "command": "dims",
        }, settings)
        assert config.resolved()["system"] == config.system.to_dict()

    # ========================================
    # ERROR TESTS
    # ========================================

    def test_invalid_system(self, settings):
        """Test that q not dividing b is a validation error, not a config error"""
        with pytest.raises(ValidationError):
            build_run_config({
                "system": {"b": {"kind": "periodic", "values": [4]},
                           "q": {"kind": "periodic", "values": [3]}},
                "command": "dims",
            }, settings)

    def test_unknown_parameter(self, settings):
        """Test the field path of an unknown parameter"""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"system": {"preset": "cantor"}, "command": "dims",
                              "parameters": {"bogus": 1}}, settings)
        assert exc.value.field_path == "parameters.bogus"

    def test_unknown_command(self, settings):
        """Test the field path of a bad command"""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"system": {"preset": "cantor"}, "command": "plot"}, settings)
        assert exc.value.field_path == "command"

    def test_missing_system(self, settings):
        """Test that every command but ims needs a system"""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"command": "dims"}, settings)
        assert exc.value.field_path == "system"

    def test_ims_needs_sequences(self, settings):
        """Test that ims requires n, m and t"""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"command": "ims", "parameters": {"m": {"kind": "periodic", "values": [2]}}},
                             settings)
        assert exc.value.field_path == "parameters.n"

    def test_intermediate_needs_target(self, settings):
        """Test that the intermediate kind needs t"""
        with pytest.raises(ConfigError) as exc:
            build_run_config({"system": {"preset": "cantor"}, "command": "spectrum-gen",
                              "parameters": {"kind": "intermediate"}}, settings)
        assert exc.value.field_path == "parameters.t"

    def test_level_above_cap(self, settings):
        """Test that levels are capped by the lab limit"""
        with pytest.raises(ConfigError):
            build_run_config({"system": {"preset": "cantor"}, "command": "spectrum-gen",
                              "parameters": {"level": 13}}, settings)

    # ========================================
    # HASH AND FILE TESTS
    # ========================================

    def test_hash_stable(self, settings):
        """Test that equal configs hash equally and threads do not matter"""
        data = {"system": {"preset": "cantor"}, "command": "dims"}
        a = build_run_config(data, settings)
        b = build_run_config(data, LabSettings(threads=8))
        assert config_hash(a.resolved()) == config_hash(b.resolved())
        c = build_run_config(dict(data, parameters={"depth": 32}), settings)
        assert config_hash(a.resolved()) != config_hash(c.resolved())

    def test_parse_config_file(self, tmp_path, settings):
        """Test reading a run config from disk"""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"system": {"preset": "mixed"}, "command": "dims"}))
        config = parse_config(str(path), settings)
        assert config.command == "dims"
        assert config.system.q(2) == 3

    def test_parse_config_missing(self, tmp_path, settings):
        """Test that a missing run config is a config error"""
        with pytest.raises(ConfigError):
            parse_config(str(tmp_path / "absent.json"), settings)

    def test_parse_config_invalid(self, tmp_path, settings):
        """Test that broken JSON is a config error"""
        path = tmp_path / "run.json"
        path.write_text("[1, 2")
        with pytest.raises(ConfigError):
            parse_config(str(path), settings)
