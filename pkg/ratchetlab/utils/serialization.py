import enum
import logging

import orjson

from pydantic import BaseModel

logger = logging.getLogger(__name__)


def sanitize_for_json(obj, depth=0, max_depth=10):
    """
    Recursively process data so orjson can write it:
    - Convert non-string keys to strings in dictionaries
    - Render bytes as lowercase hex
    - Dump pydantic models in JSON mode and enums as their values
    - Convert anything else unknown to a string
    - Prevent infinite recursion with depth limiting
    """
    if depth > max_depth:
        return str(obj)

    if isinstance(obj, BaseModel):
        return sanitize_for_json(obj.model_dump(mode="json"), depth + 1, max_depth)
    if isinstance(obj, dict):
        return {str(key): sanitize_for_json(value, depth + 1, max_depth) for key, value in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        return [sanitize_for_json(item, depth + 1, max_depth) for item in obj]
    if isinstance(obj, (bytes, bytearray)):
        return bytes(obj).hex()
    if isinstance(obj, enum.Enum):
        return obj.value
    if obj is None or isinstance(obj, (str, int, float, bool)):
        return obj
    logger.debug(f"Rendering {type(obj).__name__} as a string for JSON output")
    return str(obj)


def dumps_pretty(obj) -> bytes:
    """Indented, key-sorted JSON for CLI reports"""
    return orjson.dumps(sanitize_for_json(obj), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)
