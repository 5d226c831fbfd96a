import os
import logging
import logging.config

from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file if it exists
env_path = Path(".") / ".env"
if env_path.exists():
    load_dotenv(dotenv_path=env_path)

# Logging settings
LOG_LEVEL = os.getenv("LOG_LEVEL", "info").upper()
LOG_FORMAT = os.getenv("LOG_FORMAT", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

# Double ratchet settings
MAX_SKIP = int(os.getenv("RATCHETLAB_MAX_SKIP", 1000))

# Prekey server settings (logical ticks)
ROTATION_PERIOD = int(os.getenv("RATCHETLAB_ROTATION_PERIOD", 7))
RETENTION_WINDOW = int(os.getenv("RATCHETLAB_RETENTION_WINDOW", 2 * ROTATION_PERIOD))
OPK_LOW_WATER = int(os.getenv("RATCHETLAB_OPK_LOW_WATER", 5))
OPK_BATCH = int(os.getenv("RATCHETLAB_OPK_BATCH", 10))

# Safety codes
SAFETY_CODE_ITERATIONS = int(os.getenv("RATCHETLAB_SAFETY_CODE_ITERATIONS", 5200))

# Simulation
DEFAULT_SEED = int(os.getenv("RATCHETLAB_DEFAULT_SEED", 0))


def build_logging_config(level: str = LOG_LEVEL) -> dict:
    """Logging dictConfig for the console; `level` is a logging level name."""
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "format": LOG_FORMAT,
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": level,
                "formatter": "default",
                "stream": "ext://sys.stderr",
            },
        },
        "loggers": {
            "": {  # root logger
                "handlers": ["console"],
                "level": level,
            },
            "ratchetlab": {
                "handlers": ["console"],
                "level": level,
                "propagate": False,
            },
        },
    }


def configure_logging(level: str = LOG_LEVEL) -> None:
    logging.config.dictConfig(build_logging_config(level.upper()))


# Initialize logging
configure_logging()
logger = logging.getLogger("ratchetlab")
