import copy
import logging
import os
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from .errors import InputError

logger = logging.getLogger(__name__)

ROOT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_PATH = os.path.join(ROOT_DIR, 'config.yaml')

DEFAULTS: Dict[str, Any] = {
    "output_dir": "output",
    "log_dir": "logs",
    "log_level": "INFO",
    "threads": None,
    "progress": True,
    "theta_bounds": [0.001, 10.0],
    "tuner": {
        "starts": 10,
        "evaluation_factor": 200,
        "initial_step": 0.25,
        "shrink": 0.5,
        "stop_step": 1e-4,
    },
    "slicing": {"m": None, "appendant": 2},
    "benchmark": {"repetitions": 10, "test_size": 3000, "timing": True},
}


def _merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_yaml(config_path: str) -> Dict[str, Any]:
    try:
        with open(config_path, 'r', encoding='utf-8') as config_file:
            content = yaml.safe_load(config_file)
    except FileNotFoundError:
        logger.error(f"Config file not found: {config_path}")
        raise InputError(f"Config file not found: {config_path}")
    except yaml.YAMLError as e:
        logger.error(f"Error parsing {config_path}: {e}", exc_info=True)
        raise InputError(f"Malformed YAML in {config_path}: {e}")
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise InputError(f"{config_path} must contain a key-value mapping")
    return content


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """Defaults, overlaid by config.yaml (if present), overlaid by SGEK_* environment variables."""
    config = copy.deepcopy(DEFAULTS)
    path = config_path or CONFIG_PATH
    if config_path is not None or os.path.exists(path):
        config = _merge(config, load_yaml(path))

    load_dotenv(os.path.join(ROOT_DIR, '.env'))
    output_dir = os.environ.get("SGEK_OUTPUT_DIR")
    if output_dir:
        config["output_dir"] = output_dir
    threads = os.environ.get("SGEK_THREADS")
    if threads:
        try:
            config["threads"] = int(threads)
        except ValueError:
            raise InputError(f"SGEK_THREADS must be an integer, got '{threads}'")
    if not config.get("threads"):
        config["threads"] = os.cpu_count() or 1
    return config
