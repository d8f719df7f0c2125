from pathlib import Path
from typing import List, Union
import json
import logging

from pydantic import TypeAdapter, ValidationError

from ..core.exceptions import ConfigError
from ..models.experiment import ExperimentConfig

logger = logging.getLogger(__name__)

_suite_adapter = TypeAdapter(List[ExperimentConfig])


def _read_json(path: Union[str, Path]):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"Invalid JSON in {path}: {e}")


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load and validate a single experiment config.

    Raises:
        ConfigError: If the file is missing, not JSON, or fails validation
    """
    payload = _read_json(path)
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        logger.error(f"Invalid experiment config {path}: {e}")
        raise ConfigError(f"Invalid experiment config {path}: {e}")


def load_suite(path: Union[str, Path]) -> List[ExperimentConfig]:
    """
    Load a suite file: a JSON array of experiment configs.

    Every entry is validated before anything runs.
    """
    payload = _read_json(path)
    if not isinstance(payload, list):
        raise ConfigError(f"Suite file {path} must contain a JSON array")
    try:
        return _suite_adapter.validate_python(payload)
    except ValidationError as e:
        logger.error(f"Invalid suite {path}: {e}")
        raise ConfigError(f"Invalid suite {path}: {e}")
