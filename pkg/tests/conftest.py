import pytest

from ratchetlab.utils.crypto.entropy import SeededEntropy
from ratchetlab.utils.registry.prekey_registry import PrekeyRegistry
from ratchetlab.utils.sim.party import Party

FIELD_PRIME = 2 ** 255 - 19
A24 = 121665


def reference_x25519(scalar: bytes, u: bytes) -> bytes:
    """Montgomery ladder straight from RFC 7748, independent of `cryptography`"""
    k = bytearray(scalar)
    k[0] &= 248
    k[31] &= 127
    k[31] |= 64
    k_int = int.from_bytes(k, "little")
    x1 = int.from_bytes(u, "little") & ((1 << 255) - 1)
    x2, z2, x3, z3 = 1, 0, x1, 1
    swap = 0
    for t in reversed(range(255)):
        bit = (k_int >> t) & 1
        swap ^= bit
        if swap:
            x2, x3 = x3, x2
            z2, z3 = z3, z2
        swap = bit
        a = x2 + z2
        aa = a * a
        b = x2 - z2
        bb = b * b
        e = aa - bb
        c = x3 + z3
        d = x3 - z3
        da = d * a
        cb = c * b
        x3 = (da + cb) ** 2 % FIELD_PRIME
        z3 = x1 * (da - cb) ** 2 % FIELD_PRIME
        x2 = aa * bb % FIELD_PRIME
        z2 = e * (aa + A24 * e) % FIELD_PRIME
    if swap:
        x2, x3 = x3, x2
        z2, z3 = z3, z2
    return (x2 * pow(z2, FIELD_PRIME - 2, FIELD_PRIME) % FIELD_PRIME).to_bytes(32, "little")


@pytest.fixture
def x25519_oracle():
    return reference_x25519


@pytest.fixture
def rng():
    return SeededEntropy(1234)


@pytest.fixture
def registry():
    return PrekeyRegistry()


@pytest.fixture
def make_party(rng):
    def factory(user_id: str) -> Party:
        return Party(user_id, rng.fork(user_id))

    return factory


@pytest.fixture
def adam_bud(registry, make_party):
    """Two published users, ten one-time prekeys each"""
    adam = make_party("adam")
    bud = make_party("bud")
    adam.publish(registry, now=0)
    bud.publish(registry, now=0)
    return adam, bud
