"""
Canonical encodings and the wire format (bit-exact layout in docs/wire.md).

    Initial = 0x01 0x01 || enc(IK_a) || enc(EK_a) || spk_id(4) || opk_flag(1) || [opk_id(4)] || clen(4) || ciphertext
    Normal  = 0x01 0x02 || enc(ratchet_pub) || prev_len(4) || index(4) || clen(4) || ciphertext

enc(K) is the 33-byte public key encoding 0x05 || K. Counters are big-endian.
Every open_* function is total: any input either parses or raises ParseError.
"""
import struct

from typing import Union

from ratchetlab.core.errors import ParseError
from ratchetlab.models.crypto.keys import PublicKey
from ratchetlab.models.ratchet.state import (
    COUNTER_LIMIT,
    RatchetHeader
)
from ratchetlab.models.session.session import (
    WIRE_VERSION,
    Envelope,
    EnvelopeKind,
    NormalMessage
)
from ratchetlab.models.x3dh.messages import InitialMessage

KEY_TYPE_CURVE25519 = 0x05
ENCODED_KEY_LENGTH = 33
HEADER_LENGTH = ENCODED_KEY_LENGTH + 4 + 4
OPK_ABSENT = 0x00
OPK_PRESENT = 0x01

_U32 = struct.Struct(">I")


def encode_public(key: PublicKey) -> bytes:
    return bytes([KEY_TYPE_CURVE25519]) + key.data


def decode_public(data: bytes) -> PublicKey:
    if len(data) != ENCODED_KEY_LENGTH:
        raise ParseError(f"encoded public key must be {ENCODED_KEY_LENGTH} bytes, got {len(data)}")
    if data[0] != KEY_TYPE_CURVE25519:
        raise ParseError(f"unknown public key type byte 0x{data[0]:02x}")
    return PublicKey(data=bytes(data[1:]))


def _u32(value: int, what: str) -> bytes:
    if not 0 <= value < COUNTER_LIMIT:
        raise ParseError(f"{what}={value} does not fit in 4 bytes")
    return _U32.pack(value)


class ByteReader:
    """Cursor over untrusted bytes; running off the end is a parse error"""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.data):
            raise ParseError(f"truncated {what}: need {n} bytes at offset {self.offset}, have {len(self.data) - self.offset}")
        out = self.data[self.offset:self.offset + n]
        self.offset += n
        return out

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u32(self, what: str) -> int:
        return _U32.unpack(self.take(4, what))[0]

    def public(self, what: str) -> PublicKey:
        return decode_public(self.take(ENCODED_KEY_LENGTH, what))

    def finish(self) -> None:
        if self.offset != len(self.data):
            raise ParseError(f"{len(self.data) - self.offset} trailing bytes")


def seal_envelope(envelope: Envelope) -> bytes:
    return bytes([envelope.version, int(envelope.kind)]) + envelope.body


def open_envelope(data: bytes) -> Envelope:
    """Version and kind gate; runs before any crypto"""
    if len(data) < 2:
        raise ParseError(f"envelope too short: {len(data)} bytes")
    if data[0] != WIRE_VERSION:
        raise ParseError(f"unsupported wire version 0x{data[0]:02x}")
    try:
        kind = EnvelopeKind(data[1])
    except ValueError:
        raise ParseError(f"unknown envelope kind 0x{data[1]:02x}")
    return Envelope(version=data[0], kind=kind, body=bytes(data[2:]))


def encode_header(header: RatchetHeader) -> bytes:
    return (
        encode_public(header.ratchet_pub)
        + _u32(header.prev_chain_len, "prev_chain_len")
        + _u32(header.msg_index, "msg_index")
    )


def seal_initial(message: InitialMessage) -> bytes:
    body = encode_public(message.sender_identity_pub) + encode_public(message.ephemeral_pub)
    body += _u32(message.spk_id, "spk_id")
    if message.opk_id is None:
        body += bytes([OPK_ABSENT])
    else:
        body += bytes([OPK_PRESENT]) + _u32(message.opk_id, "opk_id")
    body += _u32(len(message.ciphertext), "ciphertext length") + message.ciphertext
    return seal_envelope(Envelope(kind=EnvelopeKind.INITIAL, body=body))


def _parse_initial_body(body: bytes) -> InitialMessage:
    reader = ByteReader(body)
    sender = reader.public("sender identity key")
    ephemeral = reader.public("ephemeral key")
    spk_id = reader.u32("spk_id")
    flag = reader.u8("opk flag")
    if flag == OPK_PRESENT:
        opk_id = reader.u32("opk_id")
    elif flag == OPK_ABSENT:
        opk_id = None
    else:
        raise ParseError(f"bad opk flag 0x{flag:02x}")
    ciphertext = reader.take(reader.u32("ciphertext length"), "ciphertext")
    reader.finish()
    return InitialMessage(
        sender_identity_pub=sender,
        ephemeral_pub=ephemeral,
        spk_id=spk_id,
        opk_id=opk_id,
        ciphertext=ciphertext,
    )


def open_initial(data: bytes) -> InitialMessage:
    envelope = open_envelope(data)
    if envelope.kind != EnvelopeKind.INITIAL:
        raise ParseError(f"expected an initial message, got kind {envelope.kind.name.lower()}")
    return _parse_initial_body(envelope.body)


def seal_normal(message: NormalMessage) -> bytes:
    body = encode_header(message.header)
    body += _u32(len(message.ciphertext), "ciphertext length") + message.ciphertext
    return seal_envelope(Envelope(kind=EnvelopeKind.NORMAL, body=body))


def _parse_normal_body(body: bytes) -> NormalMessage:
    reader = ByteReader(body)
    ratchet_pub = reader.public("ratchet key")
    prev_chain_len = reader.u32("prev_chain_len")
    msg_index = reader.u32("msg_index")
    ciphertext = reader.take(reader.u32("ciphertext length"), "ciphertext")
    reader.finish()
    return NormalMessage(
        header=RatchetHeader(ratchet_pub=ratchet_pub, prev_chain_len=prev_chain_len, msg_index=msg_index),
        ciphertext=ciphertext,
    )


def open_normal(data: bytes) -> NormalMessage:
    envelope = open_envelope(data)
    if envelope.kind != EnvelopeKind.NORMAL:
        raise ParseError(f"expected a normal message, got kind {envelope.kind.name.lower()}")
    return _parse_normal_body(envelope.body)


def open_message(data: bytes) -> Union[InitialMessage, NormalMessage]:
    """Parse either kind of wire message"""
    envelope = open_envelope(data)
    if envelope.kind == EnvelopeKind.INITIAL:
        return _parse_initial_body(envelope.body)
    return _parse_normal_body(envelope.body)
