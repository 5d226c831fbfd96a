from enum import Enum

from typing import (
    Any,
    Dict,
    List,
    Optional
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    model_validator
)

from ratchetlab.core import settings
from ratchetlab.models.registry.records import MetadataReport


class PolicyAction(str, Enum):
    DELIVER = "deliver"
    DROP = "drop"
    REORDER = "reorder"
    DUPLICATE = "duplicate"
    TAMPER = "tamper"


class TransportPolicy(BaseModel):
    """What the transport does with one sent message"""
    model_config = ConfigDict(frozen=True)

    action: PolicyAction = PolicyAction.DELIVER
    position: Optional[int] = Field(None, description="reorder: deliver after this many further deliveries", ge=1)
    byte_index: Optional[int] = Field(None, description="tamper: byte whose low bit gets flipped", ge=0)

    @model_validator(mode="after")
    def _arguments_present(self) -> "TransportPolicy":
        if self.action == PolicyAction.REORDER and self.position is None:
            raise ValueError("reorder policy needs 'position'")
        if self.action == PolicyAction.TAMPER and self.byte_index is None:
            raise ValueError("tamper policy needs 'byte_index'")
        return self


class ScriptEventKind(str, Enum):
    SEND = "send"
    ROTATE_SPK = "rotate_spk"
    REPLENISH = "replenish"
    MARK_MITM = "mark_mitm"
    VERIFY_CODES = "verify_codes"
    TICK = "tick"


class ScriptEvent(BaseModel):
    model_config = ConfigDict(populate_by_name=True, frozen=True)

    kind: ScriptEventKind
    sender: Optional[str] = Field(None, alias="from")
    to: Optional[str] = None
    text: Optional[str] = None
    user: Optional[str] = None
    n: Optional[int] = Field(None, ge=0)
    pair: Optional[List[str]] = Field(None, min_length=2, max_length=2)
    policy: TransportPolicy = Field(default_factory=TransportPolicy)
    expect: Optional[str] = Field(None, description="send: ok/rejected; verify_codes: match/mismatch")

    @model_validator(mode="after")
    def _fields_for_kind(self) -> "ScriptEvent":
        required = {
            ScriptEventKind.SEND: ("sender", "to", "text"),
            ScriptEventKind.ROTATE_SPK: ("user",),
            ScriptEventKind.REPLENISH: ("user", "n"),
            ScriptEventKind.MARK_MITM: ("pair",),
            ScriptEventKind.VERIFY_CODES: ("pair",),
            ScriptEventKind.TICK: (),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.kind.value} event is missing {', '.join(missing)}")
        if self.kind == ScriptEventKind.SEND and self.sender == self.to:
            raise ValueError("a party cannot send to itself")
        allowed = {
            ScriptEventKind.SEND: {None, "ok", "rejected"},
            ScriptEventKind.VERIFY_CODES: {None, "match", "mismatch"},
        }.get(self.kind, {None})
        if self.expect not in allowed:
            raise ValueError(f"expect={self.expect!r} is not valid for a {self.kind.value} event")
        return self

    def referenced_parties(self) -> List[str]:
        names = [self.sender, self.to, self.user] + list(self.pair or [])
        return [name for name in names if name is not None]

    def expected_outcome(self) -> str:
        if self.expect is not None:
            return self.expect
        return "rejected" if self.policy.action == PolicyAction.TAMPER else "ok"


class Scenario(BaseModel):
    """A scripted conversation plus the delivery schedule it runs under"""
    parties: List[str] = Field(..., min_length=2)
    script: List[ScriptEvent] = Field(default_factory=list)
    seed: int = settings.DEFAULT_SEED
    opk_count: int = Field(settings.OPK_BATCH, ge=0)
    attack_pair: Optional[List[str]] = Field(None, min_length=2, max_length=2)
    auto_replenish: bool = Field(True, description="Top up a pool that fell below the low-water mark after a fetch")

    @model_validator(mode="after")
    def _known_parties(self) -> "Scenario":
        if len(set(self.parties)) != len(self.parties):
            raise ValueError("party names must be unique")
        if "mark" in self.parties:
            raise ValueError("'mark' is reserved for the adversary")
        declared = set(self.parties)
        for position, event in enumerate(self.script):
            unknown = [name for name in event.referenced_parties() if name not in declared]
            if unknown:
                raise ValueError(f"script event {position} references undeclared parties: {', '.join(unknown)}")
        for name in self.attack_pair or []:
            if name not in declared:
                raise ValueError(f"attack_pair references undeclared party '{name}'")
        return self


class TranscriptEvent(BaseModel):
    """One line of the JSON-lines transcript"""
    at: int = Field(..., description="Logical tick")
    seq: int = Field(..., description="Position in the transcript")
    actor: str
    action: str
    detail: Dict[str, Any] = Field(default_factory=dict)
    outcome: str = Field("ok", description="'ok' or 'rejected'")
    reason: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.outcome == "ok"


class Transcript(BaseModel):
    events: List[TranscriptEvent] = Field(default_factory=list)
    failures: List[str] = Field(default_factory=list, description="Scripted expectations that did not hold")

    def of_action(self, action: str) -> List[TranscriptEvent]:
        return [event for event in self.events if event.action == action]

    def rejected(self) -> List[TranscriptEvent]:
        return [event for event in self.events if not event.ok]


class AttackVerdict(BaseModel):
    name: str = Field(..., description="confidentiality, integrity or authenticity")
    passed: bool
    detail: Dict[str, Any] = Field(default_factory=dict)


class AttackReport(BaseModel):
    pair: List[str]
    verdicts: List[AttackVerdict] = Field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(verdict.passed for verdict in self.verdicts)

    def verdict(self, name: str) -> AttackVerdict:
        return next(verdict for verdict in self.verdicts if verdict.name == name)


class MetadataDemoReport(BaseModel):
    reports: Dict[str, MetadataReport] = Field(default_factory=dict)
    relay_events: int = 0
    plaintext_bytes_observed: int = 0
