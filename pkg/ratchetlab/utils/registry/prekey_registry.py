import logging
import functools
import threading

import orjson

from pydantic import ValidationError

from collections import defaultdict
from typing import (
    Dict,
    Iterable,
    List,
    Optional
)

from ratchetlab.core import settings
from ratchetlab.core.errors import (
    ConflictError,
    DuplicatePrekeyError,
    NotFoundError,
    RegistryError,
    SignatureRejectedError
)
from ratchetlab.models.crypto.keys import PublicKey
from ratchetlab.models.registry.records import (
    MetadataAction,
    MetadataEvent,
    MetadataReport,
    OneTimePrekeyRecord,
    PeerSummary,
    PrekeyBundle,
    RegistrySnapshot,
    SignedPrekeyRecord,
    SignedPrekeyUpload,
    UserRecord
)
from ratchetlab.utils.crypto.primitives import verify_prekey
from ratchetlab.utils.session.codec import encode_public

logger = logging.getLogger(__name__)


def _serialized(method):
    """Apply a registry command atomically, in arrival order"""

    @functools.wraps(method)
    def wrapper(self, *args, **kwargs):
        with self._lock:
            return method(self, *args, **kwargs)

    return wrapper


def fold_metadata_events(user_id: str, events: Iterable[MetadataEvent]) -> MetadataReport:
    """Per-peer counts and last contact for the events `user_id` initiated"""
    fetches: Dict[str, int] = defaultdict(int)
    relays: Dict[str, int] = defaultdict(int)
    last: Dict[str, int] = {}
    for event in events:
        if event.actor != user_id or event.peer is None:
            continue
        if event.action == MetadataAction.FETCH_BUNDLE:
            fetches[event.peer] += 1
        elif event.action == MetadataAction.RELAY_MESSAGE:
            relays[event.peer] += 1
        else:
            continue
        last[event.peer] = max(last.get(event.peer, event.at), event.at)
    peers = [
        PeerSummary(
            peer=peer,
            count=fetches[peer] + relays[peer],
            fetches=fetches[peer],
            relays=relays[peer],
            last_contact=last[peer],
        )
        for peer in sorted(last)
    ]
    return MetadataReport(user_id=user_id, peers=peers)


class PrekeyRegistry:
    """
    In-memory key server: identity keys, rotating signed prekeys and a
    consumable pool of one-time prekeys per user, plus the metadata the
    server inevitably learns while doing its job.

    Time is logical (integer ticks supplied by the caller). Commands are
    serialized by one lock, so concurrent callers see a single writer.
    """

    def __init__(self, retention_window: int = settings.RETENTION_WINDOW):
        self.retention_window = retention_window
        self._users: Dict[str, UserRecord] = {}
        self._unattributed: List[MetadataEvent] = []
        self._lock = threading.RLock()

    def _user(self, user_id: str) -> UserRecord:
        record = self._users.get(user_id)
        if record is None:
            raise NotFoundError(f"unknown user '{user_id}'")
        return record

    def _log(self, actor: str, action: MetadataAction, peer: Optional[str], now: int) -> None:
        event = MetadataEvent(actor=actor, action=action, peer=peer, at=now)
        record = self._users.get(actor)
        if record is None:
            self._unattributed.append(event)
        else:
            record.metadata_log.append(event)

    @staticmethod
    def _check_signature(user_id: str, identity_pub: PublicKey, spk: SignedPrekeyUpload) -> None:
        if not verify_prekey(identity_pub, encode_public(spk.public), spk.signature):
            logger.warning(f"Rejected signed prekey {spk.spk_id} for '{user_id}': signature does not verify")
            raise SignatureRejectedError(f"signed prekey {spk.spk_id} is not signed by the identity key of '{user_id}'")

    @staticmethod
    def _check_new_opks(record: UserRecord, opks: List[OneTimePrekeyRecord]) -> None:
        seen = {opk.opk_id for opk in record.one_time_pool}
        for opk in opks:
            if opk.opk_id in seen:
                raise DuplicatePrekeyError(f"one-time prekey id {opk.opk_id} already in the pool of '{record.user_id}'")
            seen.add(opk.opk_id)

    @_serialized
    def register(
            self,
            user_id: str,
            identity_pub: PublicKey,
            spk: SignedPrekeyUpload,
            opks: List[OneTimePrekeyRecord],
            now: int = 0
    ) -> bool:
        """
        Create a user record. The identity key is uploaded once and never changes.

        Raises:
            ConflictError: user_id already registered
            SignatureRejectedError: SPK signature does not verify under identity_pub
            DuplicatePrekeyError: repeated one-time prekey ids in the upload
        """
        if user_id in self._users:
            raise ConflictError(f"user '{user_id}' is already registered")
        self._check_signature(user_id, identity_pub, spk)

        record = UserRecord(
            user_id=user_id,
            identity_pub=identity_pub,
            signed_prekeys=[
                SignedPrekeyRecord(spk_id=spk.spk_id, public=spk.public, signature=spk.signature, published_at=now)
            ],
        )
        self._check_new_opks(record, list(opks))
        record.one_time_pool = sorted(opks, key=lambda opk: opk.opk_id)
        self._users[user_id] = record
        self._log(user_id, MetadataAction.REGISTER, None, now)
        logger.info(f"Registered '{user_id}' (identity {identity_pub.fingerprint()}, {len(opks)} one-time prekeys)")
        return True

    @_serialized
    def rotate_signed_prekey(self, user_id: str, new_spk: SignedPrekeyUpload, now: int) -> bool:
        """Retire the active SPK, activate `new_spk`, purge records past the retention window"""
        record = self._user(user_id)
        self._check_signature(user_id, record.identity_pub, new_spk)
        if any(existing.spk_id == new_spk.spk_id for existing in record.signed_prekeys):
            raise DuplicatePrekeyError(f"signed prekey id {new_spk.spk_id} already used by '{user_id}'")

        record.active_spk().retired_at = now
        record.signed_prekeys.append(
            SignedPrekeyRecord(
                spk_id=new_spk.spk_id, public=new_spk.public, signature=new_spk.signature, published_at=now
            )
        )
        before = len(record.signed_prekeys)
        record.signed_prekeys = [
            spk for spk in record.signed_prekeys
            if spk.retired_at is None or now <= spk.retired_at + self.retention_window
        ]
        purged = before - len(record.signed_prekeys)
        self._log(user_id, MetadataAction.ROTATE, None, now)
        logger.info(f"Rotated signed prekey for '{user_id}' to id {new_spk.spk_id} at tick {now} ({purged} purged)")
        return True

    @_serialized
    def replenish_opks(self, user_id: str, opks: List[OneTimePrekeyRecord]) -> int:
        record = self._user(user_id)
        opks = list(opks)
        self._check_new_opks(record, opks)
        record.one_time_pool = sorted(record.one_time_pool + opks, key=lambda opk: opk.opk_id)
        logger.debug(f"Pool for '{user_id}' now holds {len(record.one_time_pool)} one-time prekeys")
        return len(record.one_time_pool)

    @_serialized
    def fetch_bundle(self, requester: str, target: str, now: int = 0) -> PrekeyBundle:
        """
        Serve a prekey bundle for `target`. The lowest-id one-time prekey, if
        any, is removed from the pool and included; otherwise the bundle has none.
        """
        record = self._user(target)
        active = record.active_spk()
        opk = record.one_time_pool.pop(0) if record.one_time_pool else None
        self._log(requester, MetadataAction.FETCH_BUNDLE, target, now)
        if opk is None:
            logger.info(f"Bundle for '{target}' served to '{requester}' without a one-time prekey (pool empty)")
        return PrekeyBundle(
            identity_pub=record.identity_pub,
            spk_id=active.spk_id,
            spk_pub=active.public,
            spk_signature=active.signature,
            opk=opk,
        )

    @_serialized
    def record_relay(self, sender: str, recipient: str, now: int) -> None:
        """The server relays an opaque message; it learns who, to whom and when"""
        self._log(sender, MetadataAction.RELAY_MESSAGE, recipient, now)

    @_serialized
    def metadata_report(self, user_id: str) -> MetadataReport:
        return fold_metadata_events(user_id, self._user(user_id).metadata_log)

    @_serialized
    def metadata_log(self, user_id: str) -> List[MetadataEvent]:
        return list(self._user(user_id).metadata_log)

    @_serialized
    def pool_size(self, user_id: str) -> int:
        return len(self._user(user_id).one_time_pool)

    @_serialized
    def active_signed_prekey(self, user_id: str) -> SignedPrekeyRecord:
        return self._user(user_id).active_spk().model_copy()

    @_serialized
    def signed_prekeys(self, user_id: str) -> List[SignedPrekeyRecord]:
        return [spk.model_copy() for spk in self._user(user_id).signed_prekeys]

    @_serialized
    def retained_spk_ids(self, user_id: str) -> List[int]:
        return [spk.spk_id for spk in self._user(user_id).signed_prekeys]

    @_serialized
    def users(self) -> List[str]:
        return sorted(self._users)

    @_serialized
    def export_snapshot(self) -> bytes:
        snapshot = RegistrySnapshot(
            retention_window=self.retention_window,
            users=[self._users[user_id] for user_id in sorted(self._users)],
            unattributed_log=self._unattributed,
        )
        return orjson.dumps(snapshot.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)

    @_serialized
    def import_snapshot(self, data: bytes) -> None:
        """Replace the whole registry state with a previously exported document"""
        try:
            snapshot = RegistrySnapshot.model_validate(orjson.loads(data))
        except (orjson.JSONDecodeError, ValidationError) as e:
            raise RegistryError(f"invalid registry snapshot: {str(e)}", reason="bad-snapshot")
        self.retention_window = snapshot.retention_window
        self._users = {record.user_id: record for record in snapshot.users}
        self._unattributed = list(snapshot.unattributed_log)
        logger.info(f"Imported registry snapshot with {len(self._users)} users")
