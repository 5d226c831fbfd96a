from typing import (
    Dict,
    Optional,
    Tuple
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator
)

from ratchetlab.models.crypto.keys import (
    KeyPair,
    PublicKey
)
from ratchetlab.models.types import HexBytes

COUNTER_LIMIT = 2 ** 32


class RootKey(BaseModel):
    model_config = ConfigDict(frozen=True)

    data: HexBytes = Field(..., repr=False)

    @field_validator("data")
    @classmethod
    def _length(cls, value: bytes) -> bytes:
        if len(value) != 32:
            raise ValueError(f"root key must be 32 bytes, got {len(value)}")
        return value


class ChainKey(BaseModel):
    model_config = ConfigDict(frozen=True)

    data: HexBytes = Field(..., repr=False)
    index: int = Field(0, description="Messages already derived from this chain", ge=0)

    @field_validator("data")
    @classmethod
    def _length(cls, value: bytes) -> bytes:
        if len(value) != 32:
            raise ValueError(f"chain key must be 32 bytes, got {len(value)}")
        return value


class MessageKey(BaseModel):
    """Single-use key; packed as the 80 bytes enc_key || mac_key || iv"""
    model_config = ConfigDict(frozen=True)

    enc_key: HexBytes = Field(..., repr=False)
    mac_key: HexBytes = Field(..., repr=False)
    iv: HexBytes = Field(..., repr=False)

    @classmethod
    def from_material(cls, material: bytes) -> "MessageKey":
        return cls(enc_key=material[:32], mac_key=material[32:64], iv=material[64:80])

    def material(self) -> bytes:
        return self.enc_key + self.mac_key + self.iv


class RatchetHeader(BaseModel):
    model_config = ConfigDict(frozen=True)

    ratchet_pub: PublicKey
    prev_chain_len: int = Field(..., ge=0, lt=COUNTER_LIMIT)
    msg_index: int = Field(..., ge=0, lt=COUNTER_LIMIT)


SkippedKey = Tuple[bytes, int]


class RatchetState(BaseModel):
    """Everything one party needs to keep a conversation going"""
    root: RootKey
    send_chain: Optional[ChainKey] = None
    recv_chain: Optional[ChainKey] = None
    own_ratchet: KeyPair
    remote_ratchet_pub: Optional[PublicKey] = None
    prev_send_len: int = 0
    skipped: Dict[SkippedKey, MessageKey] = Field(default_factory=dict, repr=False)
    ad: HexBytes = b""
    dh_steps: int = 0
    symmetric_steps: int = 0
