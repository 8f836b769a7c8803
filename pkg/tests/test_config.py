"""Unit tests for configuration and logging setup."""

import logging
import tempfile
from pathlib import Path

import pytest
import yaml

from src.analysis.experiments import ExperimentRunner
from src.input.generator import DEFAULT_CAPACITY_KAPPA, AirlineConfig
from src.utils.config import get_config_value, load_config, solver_options
from src.utils.logging_setup import setup_logging


class TestConfigLoader:
    """Test suite for configuration loading functions."""

    @pytest.fixture
    def temp_config_file(self):
        """Create temporary config file for testing."""
        config_data = {
            'solver': {
                'backend': 'simplex',
                'pivot_tolerance': 1.0e-10,
                'bland_factor': 3,
            },
            'simulation': {'reps': 50, 'seed': 9},
            'experiments': {'configs': [[30, 15], [40, 10]]},
            'output': {'results_dir': 'results'},
        }

        with tempfile.NamedTemporaryFile(mode='w', delete=False, suffix='.yaml') as f:
            yaml.dump(config_data, f)
            temp_path = f.name

        yield temp_path

        # Cleanup
        Path(temp_path).unlink(missing_ok=True)

    def test_load_config_success(self, temp_config_file):
        """Test successful config loading."""
        config = load_config(temp_config_file)

        assert isinstance(config, dict)
        assert 'solver' in config
        assert 'simulation' in config

    def test_load_config_nonexistent_file(self):
        """Test that loading nonexistent file raises error."""
        with pytest.raises(FileNotFoundError):
            load_config('nonexistent_config.yaml')

    def test_load_config_from_environment(self, temp_config_file, monkeypatch):
        """Test NRM_CONFIG supplies the path when none is given."""
        monkeypatch.setenv('NRM_CONFIG', temp_config_file)
        config = load_config()
        assert config['simulation']['seed'] == 9

    def test_get_config_value_nested(self, temp_config_file):
        """Test getting nested config value."""
        config = load_config(temp_config_file)
        assert get_config_value(config, 'solver', 'bland_factor') == 3
        assert get_config_value(config, 'experiments', 'configs') == [[30, 15], [40, 10]]

    def test_get_config_value_with_default(self, temp_config_file):
        """Test getting config value with default."""
        config = load_config(temp_config_file)
        value = get_config_value(config, 'nonexistent', 'key', default='default_value')
        assert value == 'default_value'
        assert get_config_value(config, 'nonexistent') is None

    def test_get_config_value_type_safety(self, temp_config_file):
        """Test traversing into a scalar returns the default."""
        config = load_config(temp_config_file)
        value = get_config_value(config, 'simulation', 'reps', 'nested', default='default')
        assert value == 'default'

    def test_solver_options(self, temp_config_file):
        """Test solver keyword arguments fall back to defaults for missing keys."""
        options = solver_options(load_config(temp_config_file))
        assert options == {
            'backend': 'simplex',
            'pivot_tol': 1e-10,
            'feas_tol': 1e-7,
            'bland_factor': 3,
            'iteration_factor': 50,
            'dense_cell_limit': 5_000_000,
        }

    def test_load_config_empty_file(self):
        """Test loading empty config file."""
        with tempfile.NamedTemporaryFile(mode='w', delete=False, suffix='.yaml') as f:
            f.write('')
            temp_path = f.name

        try:
            assert load_config(temp_path) == {}
        finally:
            Path(temp_path).unlink(missing_ok=True)

    def test_load_config_malformed_yaml(self):
        """Test loading malformed YAML file."""
        with tempfile.NamedTemporaryFile(mode='w', delete=False, suffix='.yaml') as f:
            f.write('invalid: yaml: content::: [[[')
            temp_path = f.name

        try:
            with pytest.raises(yaml.YAMLError):
                load_config(temp_path)
        finally:
            Path(temp_path).unlink(missing_ok=True)

    def test_load_real_config_file(self, project_root):
        """Test loading the actual project config file."""
        config = load_config(str(project_root / 'config' / 'config.yaml'))

        for key in ['solver', 'oracle', 'assortment', 'simulation', 'instances',
                    'experiments', 'verification', 'output', 'logging']:
            assert key in config, f"Expected key '{key}' not found in config"
        assert len(config['experiments']['configs']) == 8
        assert config['oracle']['max_cells'] == 10_000_000

    def test_real_config_kappa_matches_code_default(self, project_root):
        """Test the shipped capacity kappa is the calibrated generator default."""
        config = load_config(str(project_root / 'config' / 'config.yaml'))
        assert config['instances']['capacity_kappa'] == DEFAULT_CAPACITY_KAPPA
        assert AirlineConfig(40, 15).capacity_kappa == DEFAULT_CAPACITY_KAPPA
        assert ExperimentRunner().capacity_kappa == DEFAULT_CAPACITY_KAPPA


class TestLoggingSetup:
    """Test suite for logging configuration."""

    def test_verbose_forces_debug(self):
        """Test --verbose overrides the configured level."""
        root = setup_logging({'logging': {'level': 'WARNING', 'console': False}}, verbose=True)
        assert root.level == logging.DEBUG
        assert not root.propagate

    def test_configured_level(self):
        """Test the level string is honoured."""
        root = setup_logging({'logging': {'level': 'warning', 'console': True}})
        assert root.level == logging.WARNING
        assert len(root.handlers) == 1

    def test_file_handler(self, temp_dir):
        """Test a log file is created under a missing directory."""
        log_file = temp_dir / 'logs' / 'nrm.log'
        root = setup_logging({'logging': {'console': False, 'file': str(log_file)}})
        logging.getLogger('src.test').info('hello')
        for handler in root.handlers:
            handler.flush()
            handler.close()
        root.handlers.clear()
        assert 'hello' in log_file.read_text(encoding='utf-8')

    def test_no_handlers_falls_back_to_null(self):
        """Test disabling every sink leaves a NullHandler."""
        root = setup_logging({'logging': {'console': False}})
        assert len(root.handlers) == 1
        assert isinstance(root.handlers[0], logging.NullHandler)
