from typing import (
    Dict,
    Optional
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field
)

from ratchetlab.models.crypto.keys import (
    KeyPair,
    PublicKey
)
from ratchetlab.models.types import HexBytes


class X3dhAgreement(BaseModel):
    """Initiator-side result of the DH/KDF phase, before anything is encrypted"""
    model_config = ConfigDict(frozen=True)

    sk: HexBytes = Field(..., exclude=True, repr=False)
    ad: HexBytes
    ephemeral_pub: PublicKey
    used_spk_id: int
    used_opk_id: Optional[int] = None


class InitiatorOutput(BaseModel):
    model_config = ConfigDict(frozen=True)

    sk: HexBytes = Field(..., exclude=True, repr=False, description="Master secret; never serialized")
    ad: HexBytes = Field(..., description="Encode(IK_a) || Encode(IK_b)")
    ephemeral_pub: PublicKey
    used_spk_id: int
    used_opk_id: Optional[int] = None
    initial_ciphertext: HexBytes


class InitialMessage(BaseModel):
    """The four items the initiator sends: IK_a, EK_a, prekey ids, ciphertext"""
    model_config = ConfigDict(frozen=True)

    sender_identity_pub: PublicKey
    ephemeral_pub: PublicKey
    spk_id: int = Field(..., ge=0, lt=2 ** 32)
    opk_id: Optional[int] = Field(None, ge=0, lt=2 ** 32)
    ciphertext: HexBytes


class ResponderKeys(BaseModel):
    """Private counterparts of everything a user published to the server"""
    identity: KeyPair
    spk_lookup: Dict[int, KeyPair] = Field(default_factory=dict, repr=False)
    opk_lookup: Dict[int, KeyPair] = Field(default_factory=dict, repr=False)

    def consume_opk(self, opk_id: int) -> None:
        self.opk_lookup.pop(opk_id, None)

    def forget_spk(self, spk_id: int) -> None:
        self.spk_lookup.pop(spk_id, None)


class X3dhHandshake(BaseModel):
    """
    What either side keeps of a finished handshake so that the initiator can
    repeat its initial message until the peer answers, and the responder can
    recognise those repeats without running the handshake again.
    """
    model_config = ConfigDict(frozen=True)

    initiator_identity_pub: PublicKey
    ephemeral_pub: PublicKey
    spk_id: int
    opk_id: Optional[int] = None
    ad: HexBytes
    first_message_key: HexBytes = Field(..., exclude=True, repr=False)

    def matches(self, msg: InitialMessage) -> bool:
        return (
            msg.ephemeral_pub.data == self.ephemeral_pub.data
            and msg.sender_identity_pub.data == self.initiator_identity_pub.data
            and msg.spk_id == self.spk_id
            and msg.opk_id == self.opk_id
        )
