from enum import Enum

from typing import (
    List,
    Optional
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field
)

from ratchetlab.models.crypto.keys import (
    PublicKey,
    Signature
)

# Registry types hold public material only; there is no field a private key could go in.


class SignedPrekeyUpload(BaseModel):
    """A signed prekey as uploaded by its owner"""
    model_config = ConfigDict(frozen=True)

    spk_id: int = Field(..., description="Owner-chosen identifier", ge=0, lt=2 ** 32)
    public: PublicKey
    signature: Signature = Field(..., description="Sign(Encode(SPK), IK)")


class SignedPrekeyRecord(BaseModel):
    """A signed prekey as stored by the server"""
    spk_id: int = Field(..., ge=0, lt=2 ** 32)
    public: PublicKey
    signature: Signature
    published_at: int = Field(..., description="Logical tick of upload")
    retired_at: Optional[int] = Field(None, description="Logical tick it stopped being active")

    @property
    def is_active(self) -> bool:
        return self.retired_at is None


class OneTimePrekeyRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    opk_id: int = Field(..., ge=0, lt=2 ** 32)
    public: PublicKey


class PrekeyBundle(BaseModel):
    """What an initiator gets from the server for one target user"""
    model_config = ConfigDict(frozen=True)

    identity_pub: PublicKey
    spk_id: int = Field(..., ge=0, lt=2 ** 32)
    spk_pub: PublicKey
    spk_signature: Signature
    opk: Optional[OneTimePrekeyRecord] = Field(None, description="Absent once the pool is drained")


class MetadataAction(str, Enum):
    REGISTER = "register"
    ROTATE = "rotate"
    FETCH_BUNDLE = "fetch_bundle"
    RELAY_MESSAGE = "relay_message"


class MetadataEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    actor: str
    action: MetadataAction
    peer: Optional[str] = None
    at: int


class UserRecord(BaseModel):
    user_id: str
    identity_pub: PublicKey
    signed_prekeys: List[SignedPrekeyRecord] = Field(default_factory=list, description="Oldest first; the last one is active")
    one_time_pool: List[OneTimePrekeyRecord] = Field(default_factory=list)
    metadata_log: List[MetadataEvent] = Field(default_factory=list)

    def active_spk(self) -> SignedPrekeyRecord:
        return self.signed_prekeys[-1]


class PeerSummary(BaseModel):
    """How one user interacted with one peer, as seen by the server"""
    peer: str
    count: int = Field(..., description="fetches + relays")
    fetches: int = 0
    relays: int = 0
    last_contact: int = Field(..., description="Tick of the most recent interaction")


class MetadataReport(BaseModel):
    user_id: str
    peers: List[PeerSummary] = Field(default_factory=list)

    def by_peer(self) -> dict:
        return {summary.peer: summary for summary in self.peers}


class RegistrySnapshot(BaseModel):
    """JSON document for harness snapshots (schema in docs/registry.md)"""
    version: int = 1
    retention_window: int
    users: List[UserRecord] = Field(default_factory=list)
    unattributed_log: List[MetadataEvent] = Field(default_factory=list)
