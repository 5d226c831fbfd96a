from typing import Annotated

from pydantic import (
    PlainSerializer,
    PlainValidator
)


def _coerce_bytes(value) -> bytes:
    """Accept raw bytes or a hex string (the JSON form)"""
    if isinstance(value, (bytes, bytearray, memoryview)):
        return bytes(value)
    if isinstance(value, str):
        try:
            return bytes.fromhex(value)
        except ValueError as e:
            raise ValueError(f"invalid hex string: {str(e)}")
    raise ValueError(f"expected bytes or hex string, got {type(value).__name__}")


# Raw bytes in Python, lowercase hex in JSON
HexBytes = Annotated[
    bytes,
    PlainValidator(_coerce_bytes),
    PlainSerializer(lambda value: value.hex(), return_type=str, when_used="json"),
]
