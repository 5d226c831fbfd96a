from typing import Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator,
    model_validator
)

from ratchetlab.models.types import HexBytes

KEY_LENGTH = 32
SIGNATURE_LENGTH = 64
TOY_DH_BOUND = 2 ** 31


def clamp_scalar(data: bytes) -> bytes:
    """Apply the X25519 scalar clamping (clear bits 0-2 and 255, set bit 254)"""
    scalar = bytearray(data)
    scalar[0] &= 248
    scalar[31] &= 127
    scalar[31] |= 64
    return bytes(scalar)


def _exact_length(value: bytes, length: int, what: str) -> bytes:
    if len(value) != length:
        raise ValueError(f"{what} must be exactly {length} bytes, got {len(value)}")
    return value


class PrivateKey(BaseModel):
    """32-byte X25519 secret scalar, always stored clamped"""
    model_config = ConfigDict(frozen=True)

    data: HexBytes = Field(..., description="Clamped 32-byte scalar")

    @field_validator("data")
    @classmethod
    def _clamped(cls, value: bytes) -> bytes:
        return clamp_scalar(_exact_length(value, KEY_LENGTH, "private key"))

    def __repr__(self) -> str:
        return "PrivateKey(<redacted>)"

    __str__ = __repr__


class PublicKey(BaseModel):
    """
    32-byte X25519 group element.

    Identity keys additionally carry `signing_key`, the Ed25519 verification
    key derived from the identity private key, so that prekey signatures can
    be checked by anyone holding the identity public key.
    """
    model_config = ConfigDict(frozen=True)

    data: HexBytes = Field(..., description="32-byte Montgomery u-coordinate")
    signing_key: Optional[HexBytes] = Field(None, description="Ed25519 verification key (identity keys only)")

    @field_validator("data")
    @classmethod
    def _key_length(cls, value: bytes) -> bytes:
        return _exact_length(value, KEY_LENGTH, "public key")

    @field_validator("signing_key")
    @classmethod
    def _signing_key_length(cls, value: Optional[bytes]) -> Optional[bytes]:
        if value is None:
            return value
        return _exact_length(value, KEY_LENGTH, "signing key")

    def fingerprint(self) -> str:
        """Short hex prefix for logs and transcripts"""
        return self.data[:4].hex()


class KeyPair(BaseModel):
    """A Curve25519 key pair in one of its prekey roles (identity, signed, one-time, ratchet)"""
    model_config = ConfigDict(frozen=True)

    private: PrivateKey
    public: PublicKey

    def __repr__(self) -> str:
        return f"KeyPair(public={self.public.fingerprint()})"


class SharedSecret(BaseModel):
    model_config = ConfigDict(frozen=True)

    data: HexBytes = Field(..., description="32-byte DH output")

    @field_validator("data")
    @classmethod
    def _secret_length(cls, value: bytes) -> bytes:
        return _exact_length(value, KEY_LENGTH, "shared secret")


class Signature(BaseModel):
    model_config = ConfigDict(frozen=True)

    data: HexBytes = Field(..., description="64-byte Ed25519 signature over an encoded public key")

    @field_validator("data")
    @classmethod
    def _signature_length(cls, value: bytes) -> bytes:
        return _exact_length(value, SIGNATURE_LENGTH, "signature")


class ToyDhParams(BaseModel):
    """Small-modulus Diffie-Hellman parameters; pedagogical only, never key material"""
    model_config = ConfigDict(frozen=True)

    base: int = Field(..., description="Prime base B", gt=1)
    modulus: int = Field(..., description="Prime modulus G", gt=2, le=TOY_DH_BOUND)

    @model_validator(mode="after")
    def _base_below_modulus(self) -> "ToyDhParams":
        if self.base >= self.modulus:
            raise ValueError(f"base {self.base} must be smaller than modulus {self.modulus}")
        return self


class ToyDhResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    X: int = Field(..., description="B^x mod G, sent by the first party")
    Y: int = Field(..., description="B^y mod G, sent by the second party")
    S: int = Field(..., description="Shared secret B^(xy) mod G")
