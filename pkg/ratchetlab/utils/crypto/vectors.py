"""
Published test vectors for the primitives, hard-coded from their RFCs:
RFC 7748 (X25519), RFC 5869 (HKDF-SHA256), RFC 4231 (HMAC-SHA256).
"""
import logging

from typing import (
    Callable,
    Tuple,
    List
)

from pydantic import (
    BaseModel,
    Field
)

from ratchetlab.core.errors import RatchetLabError
from ratchetlab.models.crypto.keys import (
    PrivateKey,
    PublicKey,
    ToyDhParams
)
from ratchetlab.utils.crypto.primitives import (
    dh,
    hmac_sha256,
    kdf,
    keypair_from_private
)
from ratchetlab.utils.crypto.toy_dh import toy_dh_roundtrip

logger = logging.getLogger(__name__)

# RFC 7748 section 5.2
X25519_SCALAR_MULT = [
    {
        "scalar": "a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4",
        "u": "e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c",
        "out": "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552",
    },
    {
        "scalar": "4b66e9d4d1b4673c5ad22691957d6af5c11b6421e0ea01d42ca4169e7918ba0d",
        "u": "e5210f12786811d3f4b7959d0538ae2c31dbe7106fc03c3efc4cd549c715a493",
        "out": "95cbde9476e8907d7aade45cb4b873f88b595a68799fa152e6f8f7647aac7957",
    },
]

# RFC 7748 section 6.1
X25519_EXCHANGE = {
    "alice_private": "77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a",
    "alice_public": "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a",
    "bob_private": "5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb",
    "bob_public": "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f",
    "shared": "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742",
}

# RFC 5869 appendix A.1
HKDF_CASE_1 = {
    "ikm": "0b" * 22,
    "salt": "000102030405060708090a0b0c",
    "info": "f0f1f2f3f4f5f6f7f8f9",
    "length": 42,
    "okm": "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865",
}

# RFC 4231 section 4.2
HMAC_CASE_1 = {
    "key": "0b" * 20,
    "data": b"Hi There".hex(),
    "mac": "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7",
}


class VectorResult(BaseModel):
    """Outcome of one published test vector"""
    name: str = Field(..., description="Vector identifier")
    passed: bool = Field(..., description="Whether the computed value matched bit-exactly")
    detail: str = Field("", description="Error text when the check raised")


def _check_x25519_scalar_mult(vector: dict) -> bool:
    out = dh(PrivateKey(data=bytes.fromhex(vector["scalar"])), PublicKey(data=bytes.fromhex(vector["u"])))
    return out.data.hex() == vector["out"]


def _check_x25519_exchange() -> bool:
    alice = keypair_from_private(PrivateKey(data=bytes.fromhex(X25519_EXCHANGE["alice_private"])))
    bob = keypair_from_private(PrivateKey(data=bytes.fromhex(X25519_EXCHANGE["bob_private"])))
    return (
        alice.public.data.hex() == X25519_EXCHANGE["alice_public"]
        and bob.public.data.hex() == X25519_EXCHANGE["bob_public"]
        and dh(alice.private, bob.public).data.hex() == X25519_EXCHANGE["shared"]
        and dh(bob.private, alice.public).data.hex() == X25519_EXCHANGE["shared"]
    )


def _check_hkdf() -> bool:
    okm = kdf(
        bytes.fromhex(HKDF_CASE_1["ikm"]),
        bytes.fromhex(HKDF_CASE_1["salt"]),
        bytes.fromhex(HKDF_CASE_1["info"]),
        HKDF_CASE_1["length"],
    )
    return okm.hex() == HKDF_CASE_1["okm"]


def _check_hmac() -> bool:
    tag = hmac_sha256(bytes.fromhex(HMAC_CASE_1["key"]), bytes.fromhex(HMAC_CASE_1["data"]))
    return tag.hex() == HMAC_CASE_1["mac"]


def _check_toy_dh() -> bool:
    result = toy_dh_roundtrip(ToyDhParams(base=5, modulus=23), 4, 3)
    return (result.X, result.Y, result.S) == (4, 10, 18)


def primitive_vectors() -> List[VectorResult]:
    """Run every published vector and report pass/fail per vector"""
    checks: List[Tuple[str, Callable[[], bool]]] = [
        ("x25519/rfc7748-5.2-1", lambda: _check_x25519_scalar_mult(X25519_SCALAR_MULT[0])),
        ("x25519/rfc7748-5.2-2", lambda: _check_x25519_scalar_mult(X25519_SCALAR_MULT[1])),
        ("x25519/rfc7748-6.1", _check_x25519_exchange),
        ("hkdf-sha256/rfc5869-a.1", _check_hkdf),
        ("hmac-sha256/rfc4231-4.2", _check_hmac),
        ("toy-dh/b5-g23-x4-y3", _check_toy_dh),
    ]
    results = []
    for name, check in checks:
        try:
            results.append(VectorResult(name=name, passed=check()))
        except RatchetLabError as e:
            logger.error(f"Vector {name} raised: {e.message}")
            results.append(VectorResult(name=name, passed=False, detail=e.message))
    return results
