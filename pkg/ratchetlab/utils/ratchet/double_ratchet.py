"""
Double Ratchet engine: root chain (DH ratchet), sending/receiving chains
(symmetric-key ratchet) and skipped message keys for out-of-order delivery.

Every operation works on a copy of the state and returns the new state, so
a failed decrypt leaves the caller's state exactly as it was.
"""
import logging
import struct

from typing import (
    Optional,
    Tuple
)

from ratchetlab.core import settings
from ratchetlab.core.errors import (
    ContributoryError,
    ParseError,
    RatchetStateError,
    RatchetStepError,
    SkippedKeyFloodError
)
from ratchetlab.models.crypto.keys import (
    KeyPair,
    PrivateKey,
    PublicKey
)
from ratchetlab.models.ratchet.state import (
    COUNTER_LIMIT,
    ChainKey,
    MessageKey,
    RatchetHeader,
    RatchetState,
    RootKey
)
from ratchetlab.utils.crypto.constants import (
    CHAIN_KEY_SEED,
    KEY_SIZE,
    MESSAGE_KEY_INFO,
    MESSAGE_KEY_MATERIAL_SIZE,
    MESSAGE_KEY_SEED,
    ROOT_STEP_INFO,
    ZERO_SALT
)
from ratchetlab.utils.crypto.entropy import EntropySource
from ratchetlab.utils.crypto.primitives import (
    aead_decrypt,
    aead_encrypt,
    dh,
    generate_keypair,
    hmac_sha256,
    kdf
)
from ratchetlab.utils.session.codec import (
    ByteReader,
    encode_header
)

logger = logging.getLogger(__name__)

STATE_FORMAT_VERSION = 0x01


def kdf_root(root: RootKey, dh_out: bytes) -> Tuple[RootKey, ChainKey]:
    """(root', chain) = split(HKDF(dh_out, salt=root, info="root-step-v1", 64))"""
    out = kdf(dh_out, root.data, ROOT_STEP_INFO, 2 * KEY_SIZE)
    return RootKey(data=out[:KEY_SIZE]), ChainKey(data=out[KEY_SIZE:], index=0)


def symmetric_step(chain: ChainKey) -> Tuple[ChainKey, MessageKey]:
    """One hashing-ratchet step: next chain key and one message key"""
    next_chain = ChainKey(data=hmac_sha256(chain.data, CHAIN_KEY_SEED), index=chain.index + 1)
    seed = hmac_sha256(chain.data, MESSAGE_KEY_SEED)
    material = kdf(seed, ZERO_SALT, MESSAGE_KEY_INFO, MESSAGE_KEY_MATERIAL_SIZE)
    return next_chain, MessageKey.from_material(material)


def _ratchet_public(pair: KeyPair) -> PublicKey:
    return PublicKey(data=pair.public.data)


def init_initiator(sk: bytes, remote_signed_prekey_pub: PublicKey, ad: bytes, rng: EntropySource) -> RatchetState:
    """Fresh ratchet pair plus an immediate DH step against the peer's signed prekey"""
    own = generate_keypair(rng)
    try:
        dh_out = dh(own.private, remote_signed_prekey_pub)
    except ContributoryError as e:
        raise RatchetStepError(f"cannot initialise ratchet: {e.message}", reason="init-failed")
    root, send_chain = kdf_root(RootKey(data=sk), dh_out.data)
    return RatchetState(
        root=root,
        send_chain=send_chain,
        own_ratchet=own,
        remote_ratchet_pub=PublicKey(data=remote_signed_prekey_pub.data),
        ad=ad,
        dh_steps=1,
    )


def init_responder(sk: bytes, own_signed_prekey: KeyPair, ad: bytes) -> RatchetState:
    """The signed prekey doubles as the first ratchet key; no chains until a message arrives"""
    return RatchetState(
        root=RootKey(data=sk),
        own_ratchet=KeyPair(private=own_signed_prekey.private, public=_ratchet_public(own_signed_prekey)),
        ad=ad,
    )


def dh_ratchet_step(state: RatchetState, new_remote_pub: PublicKey, rng: EntropySource) -> RatchetState:
    """
    Two root-KDF applications: the first yields the new receiving chain, the
    second (after regenerating our ratchet pair) the new sending chain.
    """
    if state.remote_ratchet_pub is not None and state.remote_ratchet_pub.data == new_remote_pub.data:
        raise RatchetStepError("remote ratchet key unchanged; no DH step needed", reason="same-ratchet-key")

    new_state = state.model_copy(deep=True)
    remote = PublicKey(data=new_remote_pub.data)
    try:
        root, recv_chain = kdf_root(new_state.root, dh(new_state.own_ratchet.private, remote).data)
        own = generate_keypair(rng)
        root, send_chain = kdf_root(root, dh(own.private, remote).data)
    except ContributoryError as e:
        raise RatchetStepError(f"DH ratchet step failed: {e.message}")

    new_state.prev_send_len = new_state.send_chain.index if new_state.send_chain is not None else 0
    new_state.root = root
    new_state.recv_chain = recv_chain
    new_state.send_chain = send_chain
    new_state.own_ratchet = own
    new_state.remote_ratchet_pub = remote
    new_state.dh_steps += 1
    logger.debug(f"DH ratchet step against {remote.fingerprint()}, new ratchet key {own.public.fingerprint()}")
    return new_state


def encrypt(state: RatchetState, plaintext: bytes) -> Tuple[RatchetState, RatchetHeader, bytes]:
    if state.send_chain is None:
        raise RatchetStateError("no sending chain yet; wait for the peer's first message", reason="no-send-chain")
    if state.send_chain.index >= COUNTER_LIMIT:
        raise RatchetStateError("sending chain exhausted", reason="counter-overflow")

    new_state = state.model_copy(deep=True)
    header = RatchetHeader(
        ratchet_pub=_ratchet_public(new_state.own_ratchet),
        prev_chain_len=new_state.prev_send_len,
        msg_index=new_state.send_chain.index,
    )
    new_state.send_chain, message_key = symmetric_step(new_state.send_chain)
    new_state.symmetric_steps += 1
    ciphertext = aead_encrypt(message_key.material(), plaintext, new_state.ad + encode_header(header))
    return new_state, header, ciphertext


def _skip_message_keys(state: RatchetState, until: int, max_skip: int) -> None:
    """Advance the receiving chain to `until`, storing each key passed over"""
    if state.recv_chain is None:
        return
    missing = until - state.recv_chain.index
    if missing <= 0:
        return
    if len(state.skipped) + missing > max_skip:
        raise SkippedKeyFloodError(
            f"{missing} skipped keys would exceed the bound of {max_skip} "
            f"({len(state.skipped)} already stored)"
        )
    while state.recv_chain.index < until:
        index = state.recv_chain.index
        state.recv_chain, message_key = symmetric_step(state.recv_chain)
        state.symmetric_steps += 1
        state.skipped[(state.remote_ratchet_pub.data, index)] = message_key


def decrypt(
        state: RatchetState,
        header: RatchetHeader,
        ciphertext: bytes,
        rng: EntropySource,
        max_skip: int = settings.MAX_SKIP
) -> Tuple[RatchetState, bytes]:
    """
    Decrypt one message, performing a DH step first if it carries a new
    ratchet key.

    Raises:
        AuthenticationError: the ciphertext or header was modified, or the key was already used
        SkippedKeyFloodError: accepting the message would store more than `max_skip` keys
    """
    new_state = state.model_copy(deep=True)
    associated_data = new_state.ad + encode_header(header)

    slot = (header.ratchet_pub.data, header.msg_index)
    if slot in new_state.skipped:
        message_key = new_state.skipped.pop(slot)
        return new_state, aead_decrypt(message_key.material(), ciphertext, associated_data)

    if new_state.remote_ratchet_pub is None or new_state.remote_ratchet_pub.data != header.ratchet_pub.data:
        _skip_message_keys(new_state, header.prev_chain_len, max_skip)
        new_state = dh_ratchet_step(new_state, header.ratchet_pub, rng)
    elif new_state.recv_chain is None:
        raise RatchetStateError("no receiving chain for this ratchet key", reason="no-recv-chain")
    elif header.msg_index < new_state.recv_chain.index:
        raise RatchetStateError(
            f"message {header.msg_index} on chain {header.ratchet_pub.fingerprint()} was already received or expired",
            reason="replayed-message",
        )

    _skip_message_keys(new_state, header.msg_index, max_skip)
    new_state.recv_chain, message_key = symmetric_step(new_state.recv_chain)
    new_state.symmetric_steps += 1
    plaintext = aead_decrypt(message_key.material(), ciphertext, associated_data)
    return new_state, plaintext


def serialize_state(state: RatchetState) -> bytes:
    """
    Debug-only binary form (layout in docs/ratchet-state.md). Contains every
    secret in the state; never put it on the wire.
    """
    flags = (
        (1 if state.send_chain is not None else 0)
        | (2 if state.recv_chain is not None else 0)
        | (4 if state.remote_ratchet_pub is not None else 0)
    )
    out = bytearray([STATE_FORMAT_VERSION, flags])
    out += state.root.data
    for chain in (state.send_chain, state.recv_chain):
        if chain is not None:
            out += chain.data + struct.pack(">I", chain.index)
    out += state.own_ratchet.private.data + state.own_ratchet.public.data
    if state.remote_ratchet_pub is not None:
        out += state.remote_ratchet_pub.data
    out += struct.pack(">IQQ", state.prev_send_len, state.dh_steps, state.symmetric_steps)
    out += struct.pack(">I", len(state.ad)) + state.ad
    out += struct.pack(">I", len(state.skipped))
    for (ratchet_pub, index) in sorted(state.skipped):
        out += ratchet_pub + struct.pack(">I", index) + state.skipped[(ratchet_pub, index)].material()
    return bytes(out)


def deserialize_state(data: bytes) -> RatchetState:
    reader = ByteReader(data)
    version = reader.u8("state version")
    if version != STATE_FORMAT_VERSION:
        raise ParseError(f"unsupported ratchet state version {version}")
    flags = reader.u8("state flags")
    root = RootKey(data=reader.take(KEY_SIZE, "root key"))
    chains = []
    for bit in (1, 2):
        if flags & bit:
            chains.append(ChainKey(data=reader.take(KEY_SIZE, "chain key"), index=reader.u32("chain index")))
        else:
            chains.append(None)
    own = KeyPair(
        private=PrivateKey(data=reader.take(KEY_SIZE, "ratchet private key")),
        public=PublicKey(data=reader.take(KEY_SIZE, "ratchet public key")),
    )
    remote: Optional[PublicKey] = None
    if flags & 4:
        remote = PublicKey(data=reader.take(KEY_SIZE, "remote ratchet key"))
    prev_send_len, dh_steps, symmetric_steps = struct.unpack(">IQQ", reader.take(20, "counters"))
    ad = reader.take(reader.u32("ad length"), "associated data")
    skipped = {}
    for _ in range(reader.u32("skipped count")):
        ratchet_pub = reader.take(KEY_SIZE, "skipped ratchet key")
        index = reader.u32("skipped index")
        skipped[(ratchet_pub, index)] = MessageKey.from_material(
            reader.take(MESSAGE_KEY_MATERIAL_SIZE, "skipped message key")
        )
    reader.finish()
    return RatchetState(
        root=root,
        send_chain=chains[0],
        recv_chain=chains[1],
        own_ratchet=own,
        remote_ratchet_pub=remote,
        prev_send_len=prev_send_len,
        skipped=skipped,
        ad=ad,
        dh_steps=dh_steps,
        symmetric_steps=symmetric_steps,
    )
