"""
Cryptographic primitives: X25519, HKDF-SHA256, HMAC-SHA256, the
AES-256-CBC + HMAC-SHA256 encrypt-then-MAC AEAD, and prekey signatures.

Every function here is a pure function of its arguments plus the injected
entropy source. All heavy lifting is done by `cryptography`.
"""
import logging

from typing import Union

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import (
    hashes,
    hmac,
    padding
)
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey
)
from cryptography.hazmat.primitives.asymmetric.x25519 import (
    X25519PrivateKey,
    X25519PublicKey
)
from cryptography.hazmat.primitives.ciphers import (
    Cipher,
    algorithms,
    modes
)
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ratchetlab.core.errors import (
    AuthenticationError,
    ContributoryError,
    EntropyError,
    KdfLengthError,
    MalformedCiphertextError,
    PaddingError,
    ParameterError
)
from ratchetlab.models.crypto.keys import (
    KEY_LENGTH,
    SIGNATURE_LENGTH,
    KeyPair,
    PrivateKey,
    PublicKey,
    SharedSecret,
    Signature
)
from ratchetlab.utils.crypto.constants import (
    AES_KEY_SIZE,
    BLOCK_SIZE,
    HKDF_SHA256_MAX_LENGTH,
    IV_SIZE,
    MAC_KEY_SIZE,
    MESSAGE_KEY_MATERIAL_SIZE,
    SIGNING_KEY_INFO,
    TAG_SIZE,
    ZERO_SALT
)
from ratchetlab.utils.crypto.entropy import EntropySource

logger = logging.getLogger(__name__)


def _public_from_private(private: PrivateKey) -> bytes:
    return X25519PrivateKey.from_private_bytes(private.data).public_key().public_bytes_raw()


def generate_keypair(rng: EntropySource) -> KeyPair:
    """Draw 32 bytes from `rng`, clamp them, and derive the public key"""
    seed = rng.read(KEY_LENGTH)
    if len(seed) != KEY_LENGTH:
        raise EntropyError(f"entropy source returned {len(seed)} bytes, need {KEY_LENGTH}")
    private = PrivateKey(data=seed)
    return KeyPair(private=private, public=PublicKey(data=_public_from_private(private)))


def keypair_from_private(private: PrivateKey) -> KeyPair:
    return KeyPair(private=private, public=PublicKey(data=_public_from_private(private)))


def dh(own: PrivateKey, peer: PublicKey) -> SharedSecret:
    """X25519 shared secret; the all-zero output is rejected"""
    try:
        out = X25519PrivateKey.from_private_bytes(own.data).exchange(
            X25519PublicKey.from_public_bytes(peer.data)
        )
    except ValueError as e:
        # OpenSSL refuses low-order points itself
        raise ContributoryError(f"DH with peer {peer.fingerprint()} failed: {str(e)}")
    if out == b"\x00" * KEY_LENGTH:
        raise ContributoryError(f"DH with peer {peer.fingerprint()} produced the all-zero secret")
    return SharedSecret(data=out)


def kdf(input_key_material: bytes, salt: bytes, info: bytes, out_len: int) -> bytes:
    """HKDF-SHA256 (extract-then-expand)"""
    if out_len < 1 or out_len > HKDF_SHA256_MAX_LENGTH:
        raise KdfLengthError(f"HKDF-SHA256 output length must be in 1..{HKDF_SHA256_MAX_LENGTH}, got {out_len}")
    return HKDF(
        algorithm=hashes.SHA256(),
        length=out_len,
        salt=salt,
        info=info,
    ).derive(bytes(input_key_material))


def hmac_sha256(key: bytes, data: bytes) -> bytes:
    mac = hmac.HMAC(bytes(key), hashes.SHA256())
    mac.update(bytes(data))
    return mac.finalize()


def _split_key_material(material: bytes):
    if len(material) != MESSAGE_KEY_MATERIAL_SIZE:
        raise ParameterError(
            f"message key material must be {MESSAGE_KEY_MATERIAL_SIZE} bytes, got {len(material)}"
        )
    enc_key = material[:AES_KEY_SIZE]
    mac_key = material[AES_KEY_SIZE:AES_KEY_SIZE + MAC_KEY_SIZE]
    iv = material[AES_KEY_SIZE + MAC_KEY_SIZE:]
    return enc_key, mac_key, iv


def aead_encrypt(message_key_material: bytes, plaintext: bytes, associated_data: bytes) -> bytes:
    """
    Encrypt-then-MAC. Output layout: iv(16) || AES-256-CBC(PKCS#7(plaintext)) || tag(32),
    where tag = HMAC-SHA256(mac_key, associated_data || iv || cbc_output).
    """
    enc_key, mac_key, iv = _split_key_material(message_key_material)

    padder = padding.PKCS7(BLOCK_SIZE * 8).padder()
    padded = padder.update(plaintext) + padder.finalize()

    encryptor = Cipher(algorithms.AES(enc_key), modes.CBC(iv)).encryptor()
    body = encryptor.update(padded) + encryptor.finalize()

    tag = hmac_sha256(mac_key, associated_data + iv + body)
    return iv + body + tag


def aead_decrypt(message_key_material: bytes, ciphertext: bytes, associated_data: bytes) -> bytes:
    """Verify the tag (constant time) and only then decrypt"""
    enc_key, mac_key, _ = _split_key_material(message_key_material)

    if len(ciphertext) < IV_SIZE + BLOCK_SIZE + TAG_SIZE:
        raise MalformedCiphertextError(f"ciphertext too short: {len(ciphertext)} bytes")
    if (len(ciphertext) - IV_SIZE - TAG_SIZE) % BLOCK_SIZE != 0:
        raise MalformedCiphertextError(f"ciphertext body is not block aligned: {len(ciphertext)} bytes")

    iv = ciphertext[:IV_SIZE]
    body = ciphertext[IV_SIZE:-TAG_SIZE]
    tag = ciphertext[-TAG_SIZE:]

    mac = hmac.HMAC(mac_key, hashes.SHA256())
    mac.update(associated_data + iv + body)
    try:
        mac.verify(tag)
    except InvalidSignature:
        raise AuthenticationError("message authentication failed")

    decryptor = Cipher(algorithms.AES(enc_key), modes.CBC(iv)).decryptor()
    padded = decryptor.update(body) + decryptor.finalize()
    unpadder = padding.PKCS7(BLOCK_SIZE * 8).unpadder()
    try:
        return unpadder.update(padded) + unpadder.finalize()
    except ValueError:
        logger.error("Padding invalid after a verified tag - sender is not following the protocol")
        raise PaddingError("invalid padding behind a valid tag")


def derive_signing_key(identity_private: PrivateKey) -> Ed25519PrivateKey:
    """Dedicated Ed25519 signing key derived from the identity private key"""
    seed = kdf(identity_private.data, ZERO_SALT, SIGNING_KEY_INFO, KEY_LENGTH)
    return Ed25519PrivateKey.from_private_bytes(seed)


def generate_identity_keypair(rng: EntropySource) -> KeyPair:
    """Identity pair whose public half also carries the derived verification key"""
    pair = generate_keypair(rng)
    verify_key = derive_signing_key(pair.private).public_key().public_bytes_raw()
    return KeyPair(
        private=pair.private,
        public=PublicKey(data=pair.public.data, signing_key=verify_key),
    )


def sign_prekey(identity: KeyPair, encoded_spk: bytes) -> Signature:
    return Signature(data=derive_signing_key(identity.private).sign(encoded_spk))


def verify_prekey(identity_pub: PublicKey, encoded_spk: bytes, sig: Union[Signature, bytes]) -> bool:
    """True iff `sig` is a signature over `encoded_spk` by the identity's signing key; never raises"""
    raw = sig.data if isinstance(sig, Signature) else bytes(sig)
    if len(raw) != SIGNATURE_LENGTH or identity_pub.signing_key is None:
        return False
    try:
        Ed25519PublicKey.from_public_bytes(identity_pub.signing_key).verify(raw, encoded_spk)
        return True
    except (InvalidSignature, ValueError):
        return False
