import os
import threading

from typing import Protocol

from cryptography.hazmat.primitives import (
    hashes,
    hmac
)

from ratchetlab.core.errors import EntropyError


class EntropySource(Protocol):
    """Anything that can hand out random bytes"""

    def read(self, n: int) -> bytes:
        ...


class SystemEntropy:
    """Operating-system CSPRNG; safe to share between callers"""

    def read(self, n: int) -> bytes:
        return os.urandom(n)


class SeededEntropy:
    """
    Deterministic byte stream for reproducible simulations.

    Output block i is HMAC-SHA256(seed_key, i as 8 bytes). Never use this for
    real key material: anyone who knows the seed knows every key.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._key = seed.to_bytes(16, "big", signed=True)
        self._counter = 0
        self._buffer = b""
        self._lock = threading.Lock()

    def _block(self) -> bytes:
        mac = hmac.HMAC(self._key, hashes.SHA256())
        mac.update(self._counter.to_bytes(8, "big"))
        self._counter += 1
        return mac.finalize()

    def read(self, n: int) -> bytes:
        with self._lock:
            while len(self._buffer) < n:
                self._buffer += self._block()
            out, self._buffer = self._buffer[:n], self._buffer[n:]
            return out

    def fork(self, label: str) -> "SeededEntropy":
        """Independent child stream, so parties do not perturb each other's keys"""
        child_seed = int.from_bytes(self.read(8), "big") ^ hash_label(label)
        return SeededEntropy(child_seed)


class FixedEntropy:
    """Finite entropy buffer, mostly for test vectors"""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._offset = 0

    def read(self, n: int) -> bytes:
        if self._offset + n > len(self._data):
            raise EntropyError(
                f"entropy source exhausted: wanted {n} bytes, {len(self._data) - self._offset} left"
            )
        out = self._data[self._offset:self._offset + n]
        self._offset += n
        return out


def hash_label(label: str) -> int:
    """Stable 64-bit integer for a label (Python's hash() is salted per process)"""
    digest = hashes.Hash(hashes.SHA256())
    digest.update(label.encode("utf-8"))
    return int.from_bytes(digest.finalize()[:8], "big")
