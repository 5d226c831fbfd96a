import logging

from typing import (
    Dict,
    List
)

from ratchetlab.core import settings
from ratchetlab.models.registry.records import (
    OneTimePrekeyRecord,
    PrekeyBundle,
    SignedPrekeyUpload
)
from ratchetlab.models.session.session import Session
from ratchetlab.models.x3dh.messages import ResponderKeys
from ratchetlab.utils.crypto.entropy import EntropySource
from ratchetlab.utils.crypto.primitives import (
    generate_identity_keypair,
    generate_keypair,
    sign_prekey
)
from ratchetlab.utils.registry.prekey_registry import PrekeyRegistry
from ratchetlab.utils.session.codec import encode_public

logger = logging.getLogger(__name__)


class Party:
    """
    One simulated device: its identity, the private halves of its prekeys,
    and its sessions keyed by peer id. Private keys never leave this object.
    """

    def __init__(self, user_id: str, rng: EntropySource):
        self.user_id = user_id
        self.rng = rng
        self.identity = generate_identity_keypair(rng)
        self.keys = ResponderKeys(identity=self.identity)
        self.sessions: Dict[str, Session] = {}
        self._next_spk_id = 1
        self._next_opk_id = 1

    def new_signed_prekey(self) -> SignedPrekeyUpload:
        pair = generate_keypair(self.rng)
        spk_id = self._next_spk_id
        self._next_spk_id += 1
        self.keys.spk_lookup[spk_id] = pair
        return SignedPrekeyUpload(
            spk_id=spk_id,
            public=pair.public,
            signature=sign_prekey(self.identity, encode_public(pair.public)),
        )

    def new_one_time_prekeys(self, n: int) -> List[OneTimePrekeyRecord]:
        records = []
        for _ in range(n):
            pair = generate_keypair(self.rng)
            opk_id = self._next_opk_id
            self._next_opk_id += 1
            self.keys.opk_lookup[opk_id] = pair
            records.append(OneTimePrekeyRecord(opk_id=opk_id, public=pair.public))
        return records

    def publish(self, registry: PrekeyRegistry, now: int, opk_count: int = settings.OPK_BATCH) -> None:
        registry.register(
            self.user_id,
            self.identity.public,
            self.new_signed_prekey(),
            self.new_one_time_prekeys(opk_count),
            now,
        )

    def rotate(self, registry: PrekeyRegistry, now: int) -> int:
        """Upload a fresh signed prekey and drop private halves the server no longer retains"""
        upload = self.new_signed_prekey()
        registry.rotate_signed_prekey(self.user_id, upload, now)
        retained = set(registry.retained_spk_ids(self.user_id))
        for spk_id in list(self.keys.spk_lookup):
            if spk_id not in retained:
                self.keys.forget_spk(spk_id)
                logger.debug(f"'{self.user_id}' deleted private signed prekey {spk_id}")
        return upload.spk_id

    def replenish(self, registry: PrekeyRegistry, n: int) -> int:
        return registry.replenish_opks(self.user_id, self.new_one_time_prekeys(n))

    def local_bundle(self) -> PrekeyBundle:
        """A bundle built straight from this party's own keys, bypassing the server"""
        spk_id = max(self.keys.spk_lookup)
        spk = self.keys.spk_lookup[spk_id]
        opk = self.new_one_time_prekeys(1)[0]
        return PrekeyBundle(
            identity_pub=self.identity.public,
            spk_id=spk_id,
            spk_pub=spk.public,
            spk_signature=sign_prekey(self.identity, encode_public(spk.public)),
            opk=opk,
        )
