from typing import Optional

from pydantic_settings import BaseSettings
from .constants import DEFAULT_GRID_POINTS, XMAX_FACTOR


class Settings(BaseSettings):
    # Grid settings
    GRID_POINTS: int = DEFAULT_GRID_POINTS
    XMAX_FACTOR: float = XMAX_FACTOR

    # Tolerances
    QUAD_TOL: float = 1e-10
    ODE_TOL: float = 1e-9
    CHAIN_TOL: float = 1e-6

    # Zero-mode construction; without SEED_X the seed sits where Re xi reaches SEED_XI
    SEED_X: Optional[float] = None
    SEED_XI: float = 150.0
    SERIES_TERMS: int = 3

    # Output settings
    OUTPUT_DIR: str = "./runs"
    JOBS: int = 1

    # Logging settings
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = "susyqm.log"

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"


settings = Settings()
