"""Configuration loading and management."""

import os
from pathlib import Path
from typing import Any, Dict

import yaml

DEFAULT_CONFIG_FILE = "config/config.yaml"


def load_config(config_file: str | None = None) -> Dict[str, Any]:
    """
    Load configuration from YAML file.

    Args:
        config_file: Path to configuration file. Falls back to ``NRM_CONFIG``
            and then to ``config/config.yaml``.

    Returns:
        Configuration dictionary
    """
    config_file = config_file or os.getenv("NRM_CONFIG", DEFAULT_CONFIG_FILE)
    config_path = Path(config_file)

    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_file}")

    with open(config_path, 'r', encoding='utf-8') as f:
        config = yaml.safe_load(f)

    return config or {}


def get_config_value(config: Dict[str, Any], *keys, default=None):
    """
    Get nested configuration value.

    Args:
        config: Configuration dictionary
        *keys: Sequence of keys to traverse
        default: Default value if key not found

    Returns:
        Configuration value or default
    """
    value = config
    for key in keys:
        if isinstance(value, dict) and key in value:
            value = value[key]
        else:
            return default
    return value


def solver_options(config: Dict[str, Any]) -> Dict[str, Any]:
    """Keyword arguments for ``src.lp.solve`` taken from the ``solver`` section."""
    return {
        "backend": get_config_value(config, "solver", "backend", default="auto"),
        "pivot_tol": float(get_config_value(config, "solver", "pivot_tolerance", default=1e-9)),
        "feas_tol": float(
            get_config_value(config, "solver", "feasibility_tolerance", default=1e-7)
        ),
        "bland_factor": int(get_config_value(config, "solver", "bland_factor", default=2)),
        "iteration_factor": int(get_config_value(config, "solver", "iteration_factor", default=50)),
        "dense_cell_limit": int(
            get_config_value(config, "solver", "dense_cell_limit", default=5_000_000)
        ),
    }
