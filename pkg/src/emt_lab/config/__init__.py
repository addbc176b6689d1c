"""Runtime settings and study files."""

from emt_lab.config.settings import RuntimeSettings
from emt_lab.config.study import StudyConfig, load_study_config

__all__ = [
    "RuntimeSettings",
    "StudyConfig",
    "load_study_config",
]
