import sys
import logging
import functools

from ratchetlab.core.errors import RatchetLabError

logger = logging.getLogger(__name__)

EXIT_COMPONENT_ERROR = 2
EXIT_UNEXPECTED_ERROR = 3


def handle_cli_errors(func):
    """Turn an error escaping a CLI command into a log line and an exit code"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except RatchetLabError as e:
            logger.error(f"{func.__name__} failed ({e.reason}): {e.message}")
            return EXIT_COMPONENT_ERROR
        except Exception as e:
            logger.exception(f"Unexpected error in {func.__name__}: {str(e)}")
            return EXIT_UNEXPECTED_ERROR

    return wrapper


def write_stdout(data: bytes) -> None:
    sys.stdout.buffer.write(data)
    if not data.endswith(b"\n"):
        sys.stdout.buffer.write(b"\n")
    sys.stdout.flush()
