"""Command-line interface: configuration, experiment presets and artifact writers."""

from .config import ConfigError, ExperimentConfig, build_config, parse_text
from .main import main

__all__ = ["ConfigError", "ExperimentConfig", "build_config", "main", "parse_text"]
