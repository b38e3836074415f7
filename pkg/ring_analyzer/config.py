"""Application configuration using Pydantic Settings."""

from functools import lru_cache
from pathlib import Path

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class NumericsSettings(BaseSettings):
    """Truncation and tolerance knobs for the analytic modules."""

    default_nu: int = Field(default=30, alias="RING_ANALYZER_NU", ge=2, le=400)
    j_max: int = Field(default=40, alias="RING_ANALYZER_J_MAX", ge=1, le=2000)
    guard_margin: float = Field(
        default=1e-6, alias="RING_ANALYZER_GUARD_MARGIN", gt=0.0, le=1e-2
    )
    singular_floor: float = Field(default=1e-15, gt=0.0, le=1e-6)
    variance_clamp: float = Field(default=1e-12, gt=0.0, le=1e-6)
    bisection_max_iter: int = Field(default=60, ge=10, le=200)
    table_cache_size: int = Field(default=64, ge=1, le=4096)

    model_config = SettingsConfigDict(case_sensitive=False)


class SimulationSettings(BaseSettings):
    """Monte Carlo configuration."""

    threads: int = Field(default=1, alias="RING_ANALYZER_THREADS", ge=1, le=256)
    max_rounds: int = Field(default=1_000_000, ge=10)
    rng_algorithm: str = Field(default="PCG64")
    chunk_size: int = Field(default=4096, ge=1)
    default_seed: int = Field(default=20240101, ge=0, lt=2**64)
    validate_trials: int = Field(
        default=100_000, alias="RING_ANALYZER_VALIDATE_TRIALS", ge=100
    )

    model_config = SettingsConfigDict(case_sensitive=False)


class Settings(BaseSettings):
    """Main application settings."""

    app_env: str = Field(default="development", alias="APP_ENV")
    log_level: str = Field(default="WARNING", alias="LOG_LEVEL")
    log_file: Path | None = Field(default=None, alias="LOG_FILE")

    numerics: NumericsSettings = Field(default_factory=NumericsSettings)
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        env_nested_delimiter="__",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Invalid log level: {v}. Must be one of {valid_levels}")
        return v.upper()

    @field_validator("app_env")
    @classmethod
    def validate_app_env(cls, v: str) -> str:
        """Normalize the environment name."""
        return v.strip().lower()


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance.

    Returns:
        Application settings
    """
    return Settings()
