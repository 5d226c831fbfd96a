"""
Session lifecycle: X3DH hands over to the Double Ratchet.

The initial envelope's ciphertext is the X3DH-encrypted form of ratchet
message #0 (a complete normal message), so the first payload travels in the
same envelope as the key agreement. Until the peer answers, every later
send is wrapped the same way, so losing or reordering the first envelope
does not strand the session.
"""
import logging

from typing import (
    Optional,
    Protocol,
    Tuple
)

from ratchetlab.core import settings
from ratchetlab.core.errors import (
    NoSessionError,
    ProtocolError
)
from ratchetlab.models.crypto.keys import KeyPair
from ratchetlab.models.registry.records import PrekeyBundle
from ratchetlab.models.session.session import (
    Envelope,
    EnvelopeKind,
    EstablishedVia,
    NormalMessage,
    ReceiveResult,
    SendResult,
    Session
)
from ratchetlab.models.x3dh.messages import ResponderKeys
from ratchetlab.utils.crypto.entropy import EntropySource
from ratchetlab.utils.ratchet import double_ratchet
from ratchetlab.utils.session.codec import (
    open_envelope,
    open_initial,
    open_normal,
    seal_envelope,
    seal_initial,
    seal_normal
)
from ratchetlab.utils.x3dh.protocol import (
    agree_initiator,
    encrypt_initial,
    initiator_handshake,
    open_repeated_initial,
    repeat_initial,
    respond,
    responder_handshake
)

logger = logging.getLogger(__name__)

DH_STEP = "dh-step"
SYMMETRIC_STEP = "symmetric-step"


class BundleSource(Protocol):
    """Where an initiator gets prekey bundles from (the registry, or whoever sits in front of it)"""

    def fetch_bundle(self, requester: str, target: str, now: int = 0) -> PrekeyBundle:
        ...


def establish_outbound(
        own_identity: KeyPair,
        own_user_id: str,
        registry: BundleSource,
        peer_id: str,
        first_plaintext: bytes,
        rng: EntropySource,
        now: int = 0
) -> Tuple[Session, Envelope]:
    """
    fetch_bundle -> X3DH initiate -> ratchet init; the first plaintext becomes
    ratchet message #0. The session keeps repeating the handshake in every
    send until the first message from the peer arrives.
    """
    bundle = registry.fetch_bundle(own_user_id, peer_id, now)
    agreement = agree_initiator(own_identity, bundle, rng)
    ratchet = double_ratchet.init_initiator(agreement.sk, bundle.spk_pub, agreement.ad, rng)
    ratchet, header, ciphertext = double_ratchet.encrypt(ratchet, first_plaintext)
    inner = seal_normal(NormalMessage(header=header, ciphertext=ciphertext))
    _, initial = encrypt_initial(agreement, own_identity.public, inner)

    session = Session(
        peer=peer_id,
        ratchet=ratchet,
        established_via=EstablishedVia.INITIATED,
        ik_remote=bundle.identity_pub,
        ik_own=own_identity.public,
        handshake=initiator_handshake(agreement, own_identity.public),
        awaiting_reply=True,
    )
    logger.info(
        f"Session '{own_user_id}' -> '{peer_id}' established "
        f"(spk {bundle.spk_id}, {'opk ' + str(bundle.opk.opk_id) if bundle.opk else 'no opk'})"
    )
    return session, open_envelope(seal_initial(initial))


def establish_inbound(
        keys: ResponderKeys,
        envelope: Envelope,
        peer_id: str,
        rng: EntropySource,
        max_skip: int = settings.MAX_SKIP,
        existing: Optional[Session] = None
) -> Tuple[Session, ReceiveResult]:
    """
    X3DH respond -> ratchet init -> decrypt the ratchet message inside.

    An initial envelope that repeats the handshake `existing` was built from
    is an ordinary receive on `existing`: respond does not run again and no
    prekey is looked up. Anything else starts a new session.

    Works on a copy of `keys`; the one-time prekey is only deleted once the
    whole establishment succeeded, and no session exists after any failure.
    """
    if envelope.kind != EnvelopeKind.INITIAL:
        raise NoSessionError(f"normal message from '{peer_id}' but no session exists")

    data = seal_envelope(envelope)
    message = open_initial(data)
    if existing is not None and existing.handshake is not None and existing.handshake.matches(message):
        return existing, receive(existing, data, rng, max_skip)

    scratch_keys = keys.model_copy(deep=True)
    result = respond(scratch_keys, message)
    inner = open_normal(result.first_plaintext)
    ratchet = double_ratchet.init_responder(result.sk, keys.spk_lookup[message.spk_id], result.ad)
    ratchet, plaintext = double_ratchet.decrypt(ratchet, inner.header, inner.ciphertext, rng, max_skip)

    if message.opk_id is not None:
        keys.consume_opk(message.opk_id)
    session = Session(
        peer=peer_id,
        ratchet=ratchet,
        established_via=EstablishedVia.RESPONDED,
        ik_remote=message.sender_identity_pub,
        ik_own=keys.identity.public,
        handshake=responder_handshake(message, result),
    )
    logger.info(f"Session with '{peer_id}' accepted (identity {message.sender_identity_pub.fingerprint()})")
    return session, ReceiveResult(plaintext=plaintext, dh_step=True, msg_index=inner.header.msg_index)


def send(session: Session, plaintext: bytes) -> SendResult:
    ratchet, header, ciphertext = double_ratchet.encrypt(session.ratchet, plaintext)
    envelope = seal_normal(NormalMessage(header=header, ciphertext=ciphertext))
    kind = EnvelopeKind.NORMAL
    if session.awaiting_reply and session.handshake is not None:
        envelope = seal_initial(repeat_initial(session.handshake, envelope))
        kind = EnvelopeKind.INITIAL
    session.ratchet = ratchet
    return SendResult(
        envelope=envelope,
        kind=kind,
        step=DH_STEP if header.msg_index == 0 else SYMMETRIC_STEP,
        msg_index=header.msg_index,
    )


def _unwrap(session: Session, data: bytes) -> NormalMessage:
    if open_envelope(data).kind == EnvelopeKind.NORMAL:
        return open_normal(data)
    initial = open_initial(data)
    if session.handshake is None or not session.handshake.matches(initial):
        raise ProtocolError(
            f"initial message from '{session.peer}' does not repeat this session's handshake",
            reason="unknown-handshake",
        )
    return open_normal(open_repeated_initial(session.handshake, initial))


def receive(
        session: Session,
        data: bytes,
        rng: EntropySource,
        max_skip: Optional[int] = None
) -> ReceiveResult:
    """
    Decrypt a normal message, or an initial message that repeats this
    session's handshake; the session is untouched if anything fails
    """
    message = _unwrap(session, data)
    before = session.ratchet.dh_steps
    ratchet, plaintext = double_ratchet.decrypt(
        session.ratchet,
        message.header,
        message.ciphertext,
        rng,
        settings.MAX_SKIP if max_skip is None else max_skip,
    )
    session.ratchet = ratchet
    if session.awaiting_reply:
        session.awaiting_reply = False
        logger.debug(f"First reply from '{session.peer}'; no longer repeating the handshake")
    return ReceiveResult(plaintext=plaintext, dh_step=ratchet.dh_steps > before, msg_index=message.header.msg_index)
