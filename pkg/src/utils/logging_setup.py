"""Logging configuration driven by the ``logging`` section of the config file."""

import logging
from pathlib import Path
from typing import Any, Dict

from .config import get_config_value

LOG_FORMAT = "%(asctime)s %(levelname)-8s %(name)s: %(message)s"


def setup_logging(config: Dict[str, Any], verbose: bool = False) -> logging.Logger:
    """
    Configure the ``src`` logger hierarchy.

    Args:
        config: Configuration dictionary
        verbose: Force DEBUG level regardless of the configured level

    Returns:
        The package root logger
    """
    level_name = get_config_value(config, "logging", "level", default="INFO")
    level = logging.DEBUG if verbose else getattr(logging, str(level_name).upper(), logging.INFO)

    root = logging.getLogger("src")
    root.setLevel(level)
    root.handlers.clear()
    root.propagate = False
    formatter = logging.Formatter(LOG_FORMAT)

    # Console logs go to stderr so stdout stays machine-readable.
    if get_config_value(config, "logging", "console", default=True):
        console = logging.StreamHandler()
        console.setFormatter(formatter)
        root.addHandler(console)

    log_file = get_config_value(config, "logging", "file")
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file, encoding="utf-8")
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)

    if not root.handlers:
        root.addHandler(logging.NullHandler())
    return root
