import logging

from typing import List

from pydantic import (
    BaseModel,
    Field
)

from ratchetlab.models.sim.scenario import (
    PolicyAction,
    TransportPolicy
)
from ratchetlab.models.types import HexBytes

logger = logging.getLogger(__name__)


class Packet(BaseModel):
    seq: int = Field(..., description="Send sequence number, unique per run")
    sender: str
    recipient: str
    data: HexBytes
    copy: int = Field(1, description="1 for the original, 2 for a duplicate")
    tampered: bool = False


def flip_bit(data: bytes, byte_index: int) -> bytes:
    """Flip the low bit of byte `byte_index mod len(data)`"""
    position = byte_index % len(data)
    out = bytearray(data)
    out[position] ^= 0x01
    return bytes(out)


class Transport:
    """
    Scriptable lossy network. Every packet gets one policy: delivered now,
    dropped, held back for `position` further deliveries, delivered twice,
    or delivered with one bit flipped. Nothing here runs concurrently; the
    harness pulls deliveries out in a deterministic order.
    """

    def __init__(self):
        self.delivered_count = 0
        self._held: List[tuple] = []
        self.dropped: List[Packet] = []

    def submit(self, packet: Packet, policy: TransportPolicy) -> List[Packet]:
        """Accept a freshly sent packet; returns what gets delivered right away"""
        action = policy.action
        if action == PolicyAction.DROP:
            logger.debug(f"Dropping packet {packet.seq} {packet.sender}->{packet.recipient}")
            self.dropped.append(packet)
            return []
        if action == PolicyAction.REORDER:
            self._held.append((self.delivered_count + policy.position, packet.seq, packet))
            return []
        if action == PolicyAction.DUPLICATE:
            return [packet, packet.model_copy(update={"copy": 2})]
        if action == PolicyAction.TAMPER:
            return [packet.model_copy(update={"data": flip_bit(packet.data, policy.byte_index), "tampered": True})]
        return [packet]

    def mark_delivered(self) -> None:
        self.delivered_count += 1

    def release_due(self) -> List[Packet]:
        """Held packets whose turn has come, oldest due first"""
        due = sorted(entry for entry in self._held if entry[0] <= self.delivered_count)
        self._held = [entry for entry in self._held if entry[0] > self.delivered_count]
        return [packet for _, _, packet in due]

    def flush(self) -> List[Packet]:
        """Everything still held, at the end of the script"""
        remaining = sorted(self._held)
        self._held = []
        return [packet for _, _, packet in remaining]

    @property
    def held(self) -> int:
        return len(self._held)
