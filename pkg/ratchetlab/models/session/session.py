from enum import (
    Enum,
    IntEnum
)
from typing import Optional

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_validator
)

from ratchetlab.models.crypto.keys import PublicKey
from ratchetlab.models.ratchet.state import (
    RatchetHeader,
    RatchetState
)
from ratchetlab.models.types import HexBytes
from ratchetlab.models.x3dh.messages import X3dhHandshake

WIRE_VERSION = 0x01


class EnvelopeKind(IntEnum):
    INITIAL = 0x01
    NORMAL = 0x02


class Envelope(BaseModel):
    model_config = ConfigDict(frozen=True)

    version: int = Field(WIRE_VERSION, ge=0, le=255)
    kind: EnvelopeKind
    body: HexBytes = Field(..., description="Kind-specific payload")


class NormalMessage(BaseModel):
    model_config = ConfigDict(frozen=True)

    header: RatchetHeader
    ciphertext: HexBytes


class SafetyCode(BaseModel):
    """Human-comparable fingerprint of both identity keys"""
    model_config = ConfigDict(frozen=True)

    digits: str = Field(..., description="60 decimal digits")

    @field_validator("digits")
    @classmethod
    def _sixty_digits(cls, value: str) -> str:
        if len(value) != 60 or not value.isdigit():
            raise ValueError("safety code must be exactly 60 decimal digits")
        return value

    def grouped(self) -> str:
        """12 groups of 5 digits, the way users read them to each other"""
        return " ".join(self.digits[i:i + 5] for i in range(0, 60, 5))


class EstablishedVia(str, Enum):
    INITIATED = "initiated"
    RESPONDED = "responded"


class Session(BaseModel):
    """A conversation with one peer; single-owner like the ratchet state inside it"""
    peer: str
    ratchet: RatchetState
    established_via: EstablishedVia
    ik_remote: PublicKey
    ik_own: PublicKey
    handshake: Optional[X3dhHandshake] = Field(None, repr=False, description="The X3DH run that built this session")
    awaiting_reply: bool = Field(False, description="Initiator only: every send repeats the handshake until the peer answers")


class SendResult(BaseModel):
    envelope: HexBytes
    kind: EnvelopeKind = EnvelopeKind.NORMAL
    step: str = Field(..., description="'dh-step' or 'symmetric-step'")
    msg_index: int


class ReceiveResult(BaseModel):
    plaintext: HexBytes = Field(..., repr=False)
    dh_step: bool = Field(..., description="Whether this message moved the DH ratchet")
    msg_index: int
