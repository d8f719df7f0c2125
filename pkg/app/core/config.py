from pathlib import Path
from typing import Optional
import os
from dotenv import load_dotenv


load_dotenv()


def _optional_int(name: str) -> Optional[int]:
    value = os.getenv(name, "").strip()
    return int(value) if value else None


class Settings:
    """Application configuration settings"""

    APP_NAME: str = "advdiff-bench"
    VERSION: str = "0.1.0"
    DEBUG: bool = os.getenv("DEBUG", "false").lower() == "true"

    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FORMAT: str = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    OUTPUT_DIR: Path = Path(os.getenv("OUTPUT_DIR", "results"))
    NUM_THREADS: Optional[int] = _optional_int("NUM_THREADS")

    DEFAULT_LEARNING_RATE: float = float(os.getenv("DEFAULT_LEARNING_RATE", "0.00125"))
    DEFAULT_EPOCHS: int = int(os.getenv("DEFAULT_EPOCHS", "40000"))
    DEFAULT_LOG_EVERY: int = int(os.getenv("DEFAULT_LOG_EVERY", "100"))
    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "1"))
    HIDDEN_LAYERS: int = int(os.getenv("HIDDEN_LAYERS", "4"))
    HIDDEN_WIDTH: int = int(os.getenv("HIDDEN_WIDTH", "20"))

    SAMPLE_POINTS_1D: int = int(os.getenv("SAMPLE_POINTS_1D", "1000"))
    EVAL_GRID_2D: int = int(os.getenv("EVAL_GRID_2D", "101"))
    CSV_PRECISION: int = int(os.getenv("CSV_PRECISION", "17"))

    OSCILLATION_TOLERANCE: float = float(os.getenv("OSCILLATION_TOLERANCE", "0.05"))
    PENALTY_CONSTANT: float = float(os.getenv("PENALTY_CONSTANT", "3.0"))


settings = Settings()
