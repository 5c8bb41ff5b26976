"""
Runtime Settings — Process-level knobs read from the environment.

Values come from ``NMSPECTRAL_*`` environment variables or a ``.env`` file.
Command-line flags override them.
"""

import logging
import os
from functools import lru_cache
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from pyda_models.models import WeightMode

logger = logging.getLogger(__name__)


class RuntimeSettings(BaseSettings):
    """Environment-driven defaults for the experiment runner."""

    model_config = SettingsConfigDict(
        env_prefix="NMSPECTRAL_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    threads: Optional[int] = Field(default=None, ge=1, description="Worker threads for scans and probes")
    output_root: str = Field(default="results", description="Default artifact directory")
    weight_mode: WeightMode = Field(default=WeightMode.EXPONENTIAL)
    log_level: str = Field(default="INFO")

    def resolve_threads(self, flag: Optional[int] = None) -> int:
        """Flag wins over the environment, which wins over the CPU count."""
        if flag is not None:
            return max(1, flag)
        if self.threads is not None:
            return self.threads
        return max(1, min(8, os.cpu_count() or 1))


@lru_cache(maxsize=1)
def get_settings() -> RuntimeSettings:
    settings = RuntimeSettings()
    logger.debug("Runtime settings: %s", settings.model_dump())
    return settings
