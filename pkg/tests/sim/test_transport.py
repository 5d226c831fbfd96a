import pytest

from pydantic import ValidationError

from ratchetlab.models.sim.scenario import (
    PolicyAction,
    TransportPolicy
)
from ratchetlab.utils.sim.transport import (
    Packet,
    Transport,
    flip_bit
)


def _packet(seq: int) -> Packet:
    return Packet(seq=seq, sender="adam", recipient="bud", data=bytes([seq]) * 4)


def test_flip_bit_wraps_around():
    assert flip_bit(b"\x00\x00", 3) == b"\x00\x01"
    assert flip_bit(b"\x01", 0) == b"\x00"


def test_deliver_drop_duplicate_tamper():
    transport = Transport()
    assert transport.submit(_packet(1), TransportPolicy()) == [_packet(1)]
    assert transport.submit(_packet(2), TransportPolicy(action=PolicyAction.DROP)) == []
    assert transport.dropped == [_packet(2)]

    first, second = transport.submit(_packet(3), TransportPolicy(action=PolicyAction.DUPLICATE))
    assert (first.copy, second.copy) == (1, 2)
    assert first.data == second.data

    [tampered] = transport.submit(_packet(4), TransportPolicy(action=PolicyAction.TAMPER, byte_index=1))
    assert tampered.tampered
    assert tampered.data == b"\x04\x05\x04\x04"


def test_reordered_packet_waits_for_later_deliveries():
    transport = Transport()
    assert transport.submit(_packet(1), TransportPolicy(action=PolicyAction.REORDER, position=2)) == []
    assert transport.held == 1

    transport.mark_delivered()
    assert transport.release_due() == []
    transport.mark_delivered()
    assert transport.release_due() == [_packet(1)]
    assert transport.held == 0


def test_flush_returns_what_is_still_held():
    transport = Transport()
    transport.submit(_packet(2), TransportPolicy(action=PolicyAction.REORDER, position=9))
    transport.submit(_packet(1), TransportPolicy(action=PolicyAction.REORDER, position=5))
    assert [packet.seq for packet in transport.flush()] == [1, 2]


@pytest.mark.parametrize("action", [PolicyAction.REORDER, PolicyAction.TAMPER])
def test_policies_need_their_argument(action):
    with pytest.raises(ValidationError):
        TransportPolicy(action=action)
