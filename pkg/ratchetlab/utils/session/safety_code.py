from cryptography.hazmat.primitives import hashes

from ratchetlab.core import settings
from ratchetlab.models.crypto.keys import PublicKey
from ratchetlab.models.session.session import SafetyCode
from ratchetlab.utils.session.codec import encode_public

SAFETY_CODE_VERSION = b"\x00"


def _sha256(data: bytes) -> bytes:
    digest = hashes.Hash(hashes.SHA256())
    digest.update(data)
    return digest.finalize()


def fingerprint_half(identity_pub: PublicKey, user_id: str, iterations: int = settings.SAFETY_CODE_ITERATIONS) -> str:
    """
    30 digits for one party: d = 0x00 || Encode(IK) || user_id, then
    `iterations` rounds of d = SHA-256(d || Encode(IK)); six 5-byte chunks of
    the final digest, each rendered as a 5-digit number (mod 100000).
    """
    encoded = encode_public(identity_pub)
    digest = SAFETY_CODE_VERSION + encoded + user_id.encode("utf-8")
    for _ in range(iterations):
        digest = _sha256(digest + encoded)
    chunks = (int.from_bytes(digest[i:i + 5], "big") % 100000 for i in range(0, 30, 5))
    return "".join(f"{chunk:05d}" for chunk in chunks)


def safety_code(
        own_identity_pub: PublicKey,
        own_user_id: str,
        peer_identity_pub: PublicKey,
        peer_user_id: str,
        iterations: int = settings.SAFETY_CODE_ITERATIONS
) -> SafetyCode:
    """Both halves, smaller first, so both parties compute the identical string"""
    halves = sorted([
        fingerprint_half(own_identity_pub, own_user_id, iterations),
        fingerprint_half(peer_identity_pub, peer_user_id, iterations),
    ])
    return SafetyCode(digits="".join(halves))
