"""Configuration, orchestration, reporting, and the command-line interface."""

from .config import RunParams, parse_config, parse_config_dict, serialize_config, write_config
from .study import StudyResult, run_study

__all__ = [
    "RunParams",
    "parse_config",
    "parse_config_dict",
    "serialize_config",
    "write_config",
    "StudyResult",
    "run_study",
]
