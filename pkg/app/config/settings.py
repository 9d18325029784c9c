import os
from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Project settings
    PROJECT_NAME: str = "DualLife"
    DEBUG: bool = False

    # Numerics defaults (overridable per scenario in [numerics])
    DEFAULT_QUAD_TOL: float = Field(default=1e-10, gt=0, lt=1e-2)
    DEFAULT_ROOT_TOL: float = Field(default=1e-12, gt=0, lt=1e-2)
    MAX_TAIL_DOUBLINGS: int = Field(default=60, ge=1)

    # Simulation settings
    DUALLIFE_THREADS: int = Field(default=0, ge=0)  # 0 = auto
    MC_BLOCK_SIZE: int = Field(default=4096, ge=2)
    MC_CHUNK_STEPS: int = Field(default=256, ge=1)
    MC_MAX_TAIL_SHARE: float = Field(default=0.25, gt=0, le=1)

    model_config = SettingsConfigDict(
        env_file=".env", case_sensitive=True, extra="ignore"
    )

    @property
    def simulation_workers(self) -> int:
        if self.DUALLIFE_THREADS > 0:
            return self.DUALLIFE_THREADS
        return os.cpu_count() or 1


@lru_cache
def get_settings() -> Settings:
    return Settings()


def reload_settings() -> None:
    get_settings.cache_clear()
