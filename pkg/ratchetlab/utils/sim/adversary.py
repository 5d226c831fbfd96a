"""
Mark, the network adversary: full read/modify/inject power over the
transport, no access to anyone else's private keys.
"""
import logging
import itertools

from typing import (
    Dict,
    FrozenSet,
    List,
    Optional,
    Set,
    Tuple
)

from ratchetlab.core.errors import RatchetLabError
from ratchetlab.models.crypto.keys import PublicKey
from ratchetlab.models.registry.records import PrekeyBundle
from ratchetlab.models.session.session import (
    EnvelopeKind,
    NormalMessage,
    Session
)
from ratchetlab.utils.crypto.constants import (
    MESSAGE_KEY_INFO,
    MESSAGE_KEY_MATERIAL_SIZE,
    ZERO_SALT
)
from ratchetlab.utils.crypto.entropy import EntropySource
from ratchetlab.utils.crypto.primitives import (
    aead_decrypt,
    kdf
)
from ratchetlab.utils.registry.prekey_registry import PrekeyRegistry
from ratchetlab.utils.session.codec import (
    encode_header,
    open_envelope,
    open_message,
    seal_envelope
)
from ratchetlab.utils.session.lifecycle import (
    establish_inbound,
    establish_outbound,
    receive,
    send
)
from ratchetlab.utils.sim.party import Party
from ratchetlab.utils.sim.transport import Packet
from ratchetlab.utils.x3dh.protocol import build_associated_data

logger = logging.getLogger(__name__)

MARK = "mark"


class Mark:
    """
    Passive capture of every packet, plus bundle substitution for targeted
    pairs. For a targeted pair Mark answers each victim's bundle fetch with
    his own keys, terminates their sessions himself and re-encrypts towards
    the other victim over a second session he opens under his own identity.
    """

    def __init__(self, registry: PrekeyRegistry, rng: EntropySource):
        self.registry = registry
        self.party = Party(MARK, rng)
        self.party.new_signed_prekey()
        self.captured: List[Packet] = []
        self.learned: List[bytes] = []
        self._targets: Set[FrozenSet[str]] = set()
        # (victim, impersonated) -> Mark's session with victim, posing as impersonated
        self._sessions: Dict[Tuple[str, str], Session] = {}

    def observe(self, packet: Packet) -> None:
        self.captured.append(packet)

    def target(self, a: str, b: str) -> None:
        logger.info(f"Mark now substitutes bundles between '{a}' and '{b}'")
        self._targets.add(frozenset((a, b)))

    def intercepts(self, sender: str, recipient: str) -> bool:
        return frozenset((sender, recipient)) in self._targets

    def fetch_bundle(self, requester: str, target: str, now: int = 0) -> PrekeyBundle:
        """Stand between the initiator and the server's answer"""
        genuine = self.registry.fetch_bundle(requester, target, now)
        if not self.intercepts(requester, target):
            return genuine
        logger.debug(f"Mark swaps the bundle of '{target}' served to '{requester}'")
        return self.party.local_bundle()

    def session_with(self, victim: str, impersonated: str) -> Optional[Session]:
        return self._sessions.get((victim, impersonated))

    def relay(self, packet: Packet, now: int) -> Tuple[Packet, Optional[str]]:
        """
        Decrypt a packet from a victim and re-encrypt it to the other victim.

        Returns the rewritten packet and, if Mark had to open a session to
        the recipient first, the user whose bundle he fetched.
        """
        sender, recipient = packet.sender, packet.recipient
        envelope = open_envelope(packet.data)
        if envelope.kind == EnvelopeKind.INITIAL:
            session, result = establish_inbound(
                self.party.keys, envelope, sender, self.party.rng, existing=self._sessions.get((sender, recipient))
            )
            self._sessions[(sender, recipient)] = session
            plaintext = result.plaintext
        else:
            session = self._sessions.get((sender, recipient))
            if session is None:
                logger.debug(f"Mark cannot read packet {packet.seq}; passing it through")
                return packet, None
            plaintext = receive(session, packet.data, self.party.rng).plaintext
        self.learned.append(plaintext)

        fetched = None
        onward = self._sessions.get((recipient, sender))
        if onward is None:
            onward, out = establish_outbound(
                self.party.identity, MARK, self.registry, recipient, plaintext, self.party.rng, now
            )
            self._sessions[(recipient, sender)] = onward
            data = seal_envelope(out)
            fetched = recipient
        else:
            data = send(onward, plaintext).envelope
        return packet.model_copy(update={"data": data}), fetched

    def public_key_attack(self, known_keys: List[PublicKey]) -> int:
        """
        Try to read captured traffic using public information only: every
        ordered pair of known public keys as both key material and AD.
        Returns the number of packets that decrypted (zero unless the
        protocol is broken).
        """
        recovered = 0
        for packet in self.captured:
            try:
                message = open_message(packet.data)
            except RatchetLabError:
                continue
            if not isinstance(message, NormalMessage):
                continue
            candidates = list(known_keys) + [message.header.ratchet_pub]
            for first, second in itertools.permutations(candidates, 2):
                material = kdf(first.data + second.data, ZERO_SALT, MESSAGE_KEY_INFO, MESSAGE_KEY_MATERIAL_SIZE)
                ad = build_associated_data(first, second) + encode_header(message.header)
                try:
                    aead_decrypt(material, message.ciphertext, ad)
                    recovered += 1
                    break
                except RatchetLabError:
                    continue
        return recovered
