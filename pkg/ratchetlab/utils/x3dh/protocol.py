"""
Extended Triple Diffie-Hellman session establishment.

With a one-time prekey in the bundle four DH outputs feed the KDF, without
one only three do:

    DH1 = DH(IK_a, SPK_b)   DH2 = DH(EK_a, IK_b)   DH3 = DH(EK_a, SPK_b)   [DH4 = DH(EK_a, OPK_b)]
    SK  = HKDF(0xFF*32 || DH1 || DH2 || DH3 [|| DH4], salt=0*32, info="x3dh-sk-v1", 32)
"""
import logging

from typing import (
    Callable,
    List,
    NamedTuple,
    Optional,
    Tuple
)

from ratchetlab.core.errors import (
    AbortError,
    AuthenticationError,
    ContributoryError,
    MalformedCiphertextError,
    MissingKeyError,
    PaddingError,
    TerminatedError
)
from ratchetlab.models.crypto.keys import (
    KeyPair,
    PrivateKey,
    PublicKey
)
from ratchetlab.models.registry.records import PrekeyBundle
from ratchetlab.models.x3dh.messages import (
    InitialMessage,
    InitiatorOutput,
    ResponderKeys,
    X3dhAgreement,
    X3dhHandshake
)
from ratchetlab.utils.crypto.constants import (
    FIRST_MESSAGE_INFO,
    KEY_SIZE,
    MESSAGE_KEY_MATERIAL_SIZE,
    X3DH_PREFIX,
    X3DH_SK_INFO,
    ZERO_SALT
)
from ratchetlab.utils.crypto.entropy import EntropySource
from ratchetlab.utils.crypto.primitives import (
    aead_decrypt,
    aead_encrypt,
    dh,
    generate_keypair,
    kdf,
    verify_prekey
)
from ratchetlab.utils.session.codec import encode_public

logger = logging.getLogger(__name__)

# Receives every scratch buffer right after it has been zeroed
ErasureProbe = Callable[[bytearray], None]


class ResponderOutput(NamedTuple):
    sk: bytes
    ad: bytes
    first_plaintext: bytes


class _Scratch:
    """Mutable buffers for intermediate secrets, wiped together on exit"""

    def __init__(self, probe: Optional[ErasureProbe]):
        self.probe = probe
        self.buffers: List[bytearray] = []

    def keep(self, data: bytes) -> bytearray:
        buffer = bytearray(data)
        self.buffers.append(buffer)
        return buffer

    def wipe(self) -> None:
        for buffer in self.buffers:
            for i in range(len(buffer)):
                buffer[i] = 0
            if self.probe is not None:
                self.probe(buffer)
        self.buffers = []


def build_associated_data(ik_a: PublicKey, ik_b: PublicKey) -> bytes:
    """AD = Encode(IK_a) || Encode(IK_b), initiator first"""
    return encode_public(ik_a) + encode_public(ik_b)


def _first_message_key(sk: bytes) -> bytes:
    # Never use SK directly as an AEAD key
    return kdf(sk, ZERO_SALT, FIRST_MESSAGE_INFO, MESSAGE_KEY_MATERIAL_SIZE)


def _derive_sk(scratch: _Scratch, outputs: List[bytearray]) -> bytes:
    ikm = scratch.keep(X3DH_PREFIX)
    for output in outputs:
        ikm.extend(output)
    return kdf(ikm, ZERO_SALT, X3DH_SK_INFO, KEY_SIZE)


def agree_initiator(
        own_identity: KeyPair,
        bundle: PrekeyBundle,
        rng: EntropySource,
        erasure_probe: Optional[ErasureProbe] = None
) -> X3dhAgreement:
    """
    Verify the bundle, generate the ephemeral pair and derive SK.

    Raises:
        AbortError: the SPK signature does not verify, or a DH is non-contributory.
            Nothing is produced in either case.
    """
    if not verify_prekey(bundle.identity_pub, encode_public(bundle.spk_pub), bundle.spk_signature):
        logger.warning(f"Aborting X3DH: bad signature on signed prekey {bundle.spk_id} of {bundle.identity_pub.fingerprint()}")
        raise AbortError(f"signature on signed prekey {bundle.spk_id} does not verify", reason="bad-spk-signature")

    ephemeral = generate_keypair(rng)
    ephemeral_pub = ephemeral.public
    scratch = _Scratch(erasure_probe)
    ephemeral_private = scratch.keep(ephemeral.private.data)
    try:
        ek = PrivateKey(data=bytes(ephemeral_private))
        pairs = [
            (own_identity.private, bundle.spk_pub),
            (ek, bundle.identity_pub),
            (ek, bundle.spk_pub),
        ]
        if bundle.opk is not None:
            pairs.append((ek, bundle.opk.public))
        outputs = [scratch.keep(dh(private, public).data) for private, public in pairs]
        sk = _derive_sk(scratch, outputs)
    except ContributoryError as e:
        logger.warning(f"Aborting X3DH: {e.message}")
        raise AbortError(e.message, reason="non-contributory-dh")
    finally:
        # DH outputs and the ephemeral private key do not outlive SK derivation
        del ephemeral
        scratch.wipe()

    return X3dhAgreement(
        sk=sk,
        ad=build_associated_data(own_identity.public, bundle.identity_pub),
        ephemeral_pub=ephemeral_pub,
        used_spk_id=bundle.spk_id,
        used_opk_id=bundle.opk.opk_id if bundle.opk is not None else None,
    )


def encrypt_initial(
        agreement: X3dhAgreement,
        own_identity_pub: PublicKey,
        first_plaintext: bytes
) -> Tuple[InitiatorOutput, InitialMessage]:
    """Encrypt the first payload under a key derived from SK and build the initial message"""
    ciphertext = aead_encrypt(_first_message_key(agreement.sk), first_plaintext, agreement.ad)
    output = InitiatorOutput(
        sk=agreement.sk,
        ad=agreement.ad,
        ephemeral_pub=agreement.ephemeral_pub,
        used_spk_id=agreement.used_spk_id,
        used_opk_id=agreement.used_opk_id,
        initial_ciphertext=ciphertext,
    )
    message = InitialMessage(
        sender_identity_pub=PublicKey(data=own_identity_pub.data),
        ephemeral_pub=agreement.ephemeral_pub,
        spk_id=agreement.used_spk_id,
        opk_id=agreement.used_opk_id,
        ciphertext=ciphertext,
    )
    return output, message


def initiate(
        own_identity: KeyPair,
        bundle: PrekeyBundle,
        first_plaintext: bytes,
        rng: EntropySource,
        erasure_probe: Optional[ErasureProbe] = None
) -> Tuple[InitiatorOutput, InitialMessage]:
    """Initiator side: verify, agree on SK and emit the initial message"""
    agreement = agree_initiator(own_identity, bundle, rng, erasure_probe)
    output, message = encrypt_initial(agreement, own_identity.public, first_plaintext)
    logger.debug(
        f"X3DH initiated towards {bundle.identity_pub.fingerprint()} "
        f"({'4' if bundle.opk is not None else '3'} DH outputs)"
    )
    return output, message


def respond(
        keys: ResponderKeys,
        msg: InitialMessage,
        erasure_probe: Optional[ErasureProbe] = None
) -> ResponderOutput:
    """
    Responder side: repeat the DH and KDF computations with the private
    counterparts, rebuild AD and decrypt the initial ciphertext.

    On success the used one-time prekey is deleted from `keys`. On failure SK
    is wiped and nothing is consumed.

    Raises:
        MissingKeyError: spk_id or opk_id has no private counterpart (e.g. a replay after OPK deletion)
        TerminatedError: the initial ciphertext does not decrypt, or a DH is non-contributory
    """
    spk = keys.spk_lookup.get(msg.spk_id)
    if spk is None:
        raise MissingKeyError(f"no signed prekey with id {msg.spk_id}", reason="unknown-spk")
    opk = None
    if msg.opk_id is not None:
        opk = keys.opk_lookup.get(msg.opk_id)
        if opk is None:
            raise MissingKeyError(f"no one-time prekey with id {msg.opk_id}", reason="unknown-opk")

    scratch = _Scratch(erasure_probe)
    try:
        pairs = [
            (spk.private, msg.sender_identity_pub),
            (keys.identity.private, msg.ephemeral_pub),
            (spk.private, msg.ephemeral_pub),
        ]
        if opk is not None:
            pairs.append((opk.private, msg.ephemeral_pub))
        outputs = [scratch.keep(dh(private, public).data) for private, public in pairs]
        sk_buffer = scratch.keep(_derive_sk(scratch, outputs))
        ad = build_associated_data(msg.sender_identity_pub, keys.identity.public)
        first_plaintext = aead_decrypt(_first_message_key(bytes(sk_buffer)), msg.ciphertext, ad)
        sk = bytes(sk_buffer)
    except ContributoryError as e:
        logger.warning(f"Terminating X3DH from {msg.sender_identity_pub.fingerprint()}: {e.message}")
        raise TerminatedError(e.message, reason="non-contributory-dh")
    except (AuthenticationError, MalformedCiphertextError, PaddingError) as e:
        logger.warning(
            f"Terminating X3DH from {msg.sender_identity_pub.fingerprint()}: initial ciphertext rejected ({e.reason})"
        )
        raise TerminatedError(f"initial ciphertext rejected: {e.message}")
    finally:
        scratch.wipe()

    if msg.opk_id is not None:
        keys.consume_opk(msg.opk_id)
        logger.debug(f"Deleted one-time prekey {msg.opk_id} after use")
    return ResponderOutput(sk=sk, ad=ad, first_plaintext=first_plaintext)


def initiator_handshake(agreement: X3dhAgreement, own_identity_pub: PublicKey) -> X3dhHandshake:
    return X3dhHandshake(
        initiator_identity_pub=PublicKey(data=own_identity_pub.data),
        ephemeral_pub=agreement.ephemeral_pub,
        spk_id=agreement.used_spk_id,
        opk_id=agreement.used_opk_id,
        ad=agreement.ad,
        first_message_key=_first_message_key(agreement.sk),
    )


def responder_handshake(msg: InitialMessage, output: ResponderOutput) -> X3dhHandshake:
    return X3dhHandshake(
        initiator_identity_pub=msg.sender_identity_pub,
        ephemeral_pub=msg.ephemeral_pub,
        spk_id=msg.spk_id,
        opk_id=msg.opk_id,
        ad=output.ad,
        first_message_key=_first_message_key(output.sk),
    )


def repeat_initial(handshake: X3dhHandshake, plaintext: bytes) -> InitialMessage:
    """Wrap a later payload in the same handshake, for an initiator that has not heard back yet"""
    return InitialMessage(
        sender_identity_pub=handshake.initiator_identity_pub,
        ephemeral_pub=handshake.ephemeral_pub,
        spk_id=handshake.spk_id,
        opk_id=handshake.opk_id,
        ciphertext=aead_encrypt(handshake.first_message_key, plaintext, handshake.ad),
    )


def open_repeated_initial(handshake: X3dhHandshake, msg: InitialMessage) -> bytes:
    """
    Decrypt an initial message that `handshake.matches`. No DH is recomputed
    and no prekey is looked up or consumed.

    Raises:
        AuthenticationError: the ciphertext was not produced under this handshake
    """
    return aead_decrypt(handshake.first_message_key, msg.ciphertext, handshake.ad)
