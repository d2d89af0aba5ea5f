from functools import lru_cache

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings, read from QUERYLAB_* environment variables or .env"""

    model_config = SettingsConfigDict(env_prefix="QUERYLAB_", env_file=".env", extra="ignore")

    confidence: float = Field(0.99, gt=0, lt=1, description="Two-sided confidence level of error intervals")
    truncation_factor: int = Field(10, ge=1, description="Budget as a multiple of the expected query count")
    workers: int = Field(1, ge=1, description="Worker processes for engine trials")
    trial_chunk: int = Field(100_000, ge=1, description="Trials per vectorized batch")
    default_trials: int = Field(100_000, ge=1)
    reproduce_trials: int = Field(100_000, ge=1, description="Trials per stochastic check in reproduce-all")
    max_oracle_iterations: int = Field(10_000, ge=1, description="Double-oracle iteration cap")
    log_level: str = Field("INFO")


@lru_cache
def get_settings() -> Settings:
    """Return the process-wide settings instance"""
    return Settings()
