import random

import pytest

from hypothesis import (
    given,
    settings,
    strategies as st
)

from ratchetlab.core.errors import ParseError
from ratchetlab.models.crypto.keys import PublicKey
from ratchetlab.models.ratchet.state import RatchetHeader
from ratchetlab.models.session.session import (
    EnvelopeKind,
    NormalMessage
)
from ratchetlab.models.x3dh.messages import InitialMessage
from ratchetlab.utils.session.codec import (
    decode_public,
    encode_header,
    encode_public,
    open_envelope,
    open_initial,
    open_message,
    open_normal,
    seal_initial,
    seal_normal
)

KEY_A = PublicKey(data=bytes(range(32)))
KEY_B = PublicKey(data=bytes(range(32, 64)))


def _initial(opk_id=7):
    return InitialMessage(sender_identity_pub=KEY_A, ephemeral_pub=KEY_B, spk_id=3, opk_id=opk_id, ciphertext=b"c" * 64)


def _normal():
    header = RatchetHeader(ratchet_pub=KEY_A, prev_chain_len=2, msg_index=1)
    return NormalMessage(header=header, ciphertext=b"n" * 64)


def test_public_key_encoding_has_type_prefix():
    encoded = encode_public(KEY_A)
    assert encoded == b"\x05" + KEY_A.data
    assert decode_public(encoded) == KEY_A


@pytest.mark.parametrize("encoded", [b"\x04" + bytes(32), b"\x05" + bytes(31), b""])
def test_bad_public_key_encodings(encoded):
    with pytest.raises(ParseError):
        decode_public(encoded)


def test_header_layout_is_big_endian():
    encoded = encode_header(_normal().header)
    assert len(encoded) == 41
    assert encoded[33:37] == b"\x00\x00\x00\x02"
    assert encoded[37:41] == b"\x00\x00\x00\x01"


@pytest.mark.parametrize("opk_id", [7, None])
def test_initial_message_layout(opk_id):
    data = seal_initial(_initial(opk_id))
    assert data[:2] == b"\x01\x01"
    assert data[2:35] == encode_public(KEY_A)
    assert data[68:72] == b"\x00\x00\x00\x03"
    assert data[72] == (1 if opk_id is not None else 0)
    assert open_initial(data) == _initial(opk_id)


def test_normal_message_layout():
    data = seal_normal(_normal())
    assert data[:2] == b"\x01\x02"
    assert data[2:43] == encode_header(_normal().header)
    assert data[43:47] == (64).to_bytes(4, "big")
    assert open_normal(data) == _normal()
    assert open_message(data) == _normal()


def test_envelope_gate():
    assert open_envelope(seal_normal(_normal())).kind == EnvelopeKind.NORMAL
    with pytest.raises(ParseError):
        open_envelope(b"\x02\x02" + b"\x00" * 50)
    with pytest.raises(ParseError):
        open_envelope(b"\x01\x03" + b"\x00" * 50)
    with pytest.raises(ParseError):
        open_envelope(b"\x01")


def test_kind_mismatch_is_a_parse_error():
    with pytest.raises(ParseError):
        open_normal(seal_initial(_initial()))
    with pytest.raises(ParseError):
        open_initial(seal_normal(_normal()))


def test_truncated_and_padded_messages_are_rejected():
    data = seal_initial(_initial())
    with pytest.raises(ParseError):
        open_message(data[:-1])
    with pytest.raises(ParseError):
        open_message(data + b"\x00")


def test_unknown_opk_flag_is_rejected():
    data = bytearray(seal_initial(_initial()))
    data[72] = 0x02
    with pytest.raises(ParseError):
        open_initial(bytes(data))


def _parse_or_parse_error(data: bytes) -> None:
    try:
        open_message(data)
    except ParseError:
        pass


@given(st.binary(max_size=200))
def test_arbitrary_bytes_never_crash_the_parser(data):
    _parse_or_parse_error(data)


@given(st.sampled_from([b"\x01\x01", b"\x01\x02"]), st.binary(max_size=200))
def test_arbitrary_bodies_never_crash_the_parser(prefix, body):
    _parse_or_parse_error(prefix + body)


@pytest.mark.slow
def test_fuzz_a_hundred_thousand_inputs():
    rnd = random.Random(0)
    valid = [seal_initial(_initial()), seal_initial(_initial(None)), seal_normal(_normal())]
    for i in range(100_000):
        if i % 2:
            data = rnd.randbytes(rnd.randint(0, 160))
        else:
            data = bytearray(rnd.choice(valid))
            for _ in range(rnd.randint(1, 4)):
                data[rnd.randrange(len(data))] = rnd.randrange(256)
            data = bytes(data[:rnd.randint(0, len(data))]) if rnd.random() < 0.3 else bytes(data)
        _parse_or_parse_error(data)


def test_encoding_refuses_oversized_counters():
    with pytest.raises(ParseError):
        seal_initial(_initial().model_copy(update={"spk_id": 2 ** 32}))
