"""
Deterministic multi-party simulator.

A `Simulation` owns one registry, one transport, one Party per declared
user and the adversary. It walks the script event by event on a logical
clock and records everything that happens as a transcript. Component
errors become rejected transcript events; a run never aborts halfway.
"""
import logging

import orjson

from pathlib import Path
from pydantic import ValidationError

from collections import defaultdict
from typing import (
    Any,
    Dict,
    List,
    Optional,
    Union
)

from ratchetlab.core import settings
from ratchetlab.core.errors import (
    NoSessionError,
    RatchetLabError,
    ScenarioConfigError
)
from ratchetlab.models.session.session import EnvelopeKind
from ratchetlab.models.sim.scenario import (
    PolicyAction,
    Scenario,
    ScriptEvent,
    ScriptEventKind,
    Transcript,
    TranscriptEvent
)
from ratchetlab.utils.crypto.entropy import SeededEntropy
from ratchetlab.utils.registry.prekey_registry import PrekeyRegistry
from ratchetlab.utils.session.codec import (
    open_envelope,
    seal_envelope
)
from ratchetlab.utils.session.lifecycle import (
    DH_STEP,
    establish_inbound,
    establish_outbound,
    receive,
    send
)
from ratchetlab.utils.session.safety_code import safety_code
from ratchetlab.utils.sim.adversary import (
    MARK,
    Mark
)
from ratchetlab.utils.sim.party import Party
from ratchetlab.utils.sim.rules import check_ratchet_rules
from ratchetlab.utils.sim.transport import (
    Packet,
    Transport
)

logger = logging.getLogger(__name__)

OK = "ok"
REJECTED = "rejected"
CLOCK = "clock"


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario JSON file"""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ScenarioConfigError(f"cannot read scenario {path}: {e}")
    try:
        return Scenario.model_validate(orjson.loads(raw))
    except orjson.JSONDecodeError as e:
        raise ScenarioConfigError(f"scenario {path} is not valid JSON: {e}")
    except ValidationError as e:
        raise ScenarioConfigError(f"scenario {path} is invalid: {e}")


def write_transcript(transcript: Transcript, path: Union[str, Path]) -> None:
    Path(path).write_bytes(transcript_bytes(transcript))


def read_transcript(path: Union[str, Path]) -> Transcript:
    try:
        lines = Path(path).read_bytes().splitlines()
        events = [TranscriptEvent.model_validate(orjson.loads(line)) for line in lines if line.strip()]
    except (OSError, orjson.JSONDecodeError, ValidationError) as e:
        raise ScenarioConfigError(f"cannot read transcript {path}: {e}")
    return Transcript(events=events)


def transcript_bytes(transcript: Transcript) -> bytes:
    """One JSON object per line, keys sorted, so equal runs give equal bytes"""
    return b"".join(
        orjson.dumps(event.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS) + b"\n"
        for event in transcript.events
    )


class Simulation:
    def __init__(
            self,
            scenario: Scenario,
            seed: Optional[int] = None,
            max_skip: int = settings.MAX_SKIP,
            low_water: int = settings.OPK_LOW_WATER,
            batch: int = settings.OPK_BATCH
    ):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.max_skip = max_skip
        self.low_water = low_water
        self.batch = batch

        rng = SeededEntropy(self.seed)
        self.registry = PrekeyRegistry()
        self.transport = Transport()
        self.parties: Dict[str, Party] = {name: Party(name, rng.fork(name)) for name in scenario.parties}
        self.mark = Mark(self.registry, rng.fork(MARK))

        self.now = 0
        self.relayed: List[Packet] = []
        self.texts: Dict[int, bytes] = {}
        self.delivered: Dict[str, List[bytes]] = defaultdict(list)
        self._events: List[TranscriptEvent] = []
        self._failures: List[str] = []
        self._outcomes: Dict[int, List[str]] = defaultdict(list)
        self._expectations: Dict[int, ScriptEvent] = {}
        self._next_packet = 1
        self._ran = False

    def _emit(
            self,
            actor: str,
            action: str,
            detail: Optional[Dict[str, Any]] = None,
            error: Optional[RatchetLabError] = None
    ) -> TranscriptEvent:
        event = TranscriptEvent(
            at=self.now,
            seq=len(self._events),
            actor=actor,
            action=action,
            detail=detail or {},
            outcome=REJECTED if error is not None else OK,
            reason=error.reason if error is not None else None,
        )
        self._events.append(event)
        return event

    def run(self) -> Transcript:
        if self._ran:
            raise ScenarioConfigError("a Simulation runs exactly once; build a new one")
        self._ran = True
        logger.info(
            f"Running scenario with {len(self.scenario.parties)} parties, "
            f"{len(self.scenario.script)} events, seed {self.seed}"
        )

        for party in self.parties.values():
            party.publish(self.registry, self.now, self.scenario.opk_count)
            self._emit(party.user_id, "register", {
                "spk_id": self.registry.active_signed_prekey(party.user_id).spk_id,
                "opks": self.registry.pool_size(party.user_id),
            })

        handlers = {
            ScriptEventKind.SEND: self._send,
            ScriptEventKind.ROTATE_SPK: self._rotate,
            ScriptEventKind.REPLENISH: self._replenish,
            ScriptEventKind.MARK_MITM: self._mark_mitm,
            ScriptEventKind.VERIFY_CODES: self._verify_codes,
            ScriptEventKind.TICK: self._tick,
        }
        for position, event in enumerate(self.scenario.script):
            handlers[event.kind](position, event)

        self._pump(self.transport.flush())
        self._check_expectations()
        transcript = Transcript(events=list(self._events))
        violations = check_ratchet_rules(transcript)
        self._failures.extend(violations)
        transcript.failures = list(self._failures)

        if transcript.failures:
            logger.warning(f"Scenario finished with {len(transcript.failures)} failed expectations")
        else:
            logger.info(f"Scenario finished: {len(transcript.events)} events, all expectations held")
        return transcript

    def _fetched(self, requester: str, target: str) -> None:
        """Transcript entry for a bundle fetch, then top the target's pool up if it ran low"""
        self._emit(requester, "fetch_bundle", {"peer": target})
        party = self.parties.get(target)
        if party is None or not self.scenario.auto_replenish:
            return
        if self.registry.pool_size(target) < self.low_water:
            pool = party.replenish(self.registry, self.batch)
            self._emit(target, "replenish", {"n": self.batch, "pool": pool, "auto": True})

    def _send(self, position: int, event: ScriptEvent) -> None:
        sender = self.parties[event.sender]
        plaintext = event.text.encode("utf-8")
        seq = self._next_packet
        self._next_packet += 1
        self._expectations[seq] = event

        session = sender.sessions.get(event.to)
        try:
            if session is None:
                session, envelope = establish_outbound(
                    sender.identity, sender.user_id, self.mark, event.to, plaintext, sender.rng, self.now
                )
                sender.sessions[event.to] = session
                self._fetched(sender.user_id, event.to)
                data, step, msg_index, kind = seal_envelope(envelope), DH_STEP, 0, "initial"
            else:
                result = send(session, plaintext)
                data, step, msg_index = result.envelope, result.step, result.msg_index
                kind = "initial" if result.kind == EnvelopeKind.INITIAL else "normal"
        except RatchetLabError as e:
            logger.warning(f"'{event.sender}' could not send to '{event.to}': {e.message}")
            self._emit(event.sender, "send", {"to": event.to, "packet": seq}, error=e)
            self._outcomes[seq].append(REJECTED)
            return

        self.texts[seq] = plaintext
        self._emit(event.sender, "send", {
            "to": event.to,
            "packet": seq,
            "kind": kind,
            "step": step,
            "msg_index": msg_index,
            "size": len(data),
            "policy": event.policy.action.value,
        })
        packet = Packet(seq=seq, sender=event.sender, recipient=event.to, data=data)
        self.registry.record_relay(event.sender, event.to, self.now)
        self._emit(event.sender, "relay", {"peer": event.to, "packet": seq})
        self.relayed.append(packet)
        self.mark.observe(packet)
        self._pump(self.transport.submit(packet, event.policy))

    def _pump(self, packets: List[Packet]) -> None:
        """Deliver packets, releasing held ones as their turn comes"""
        queue = list(packets)
        while queue:
            self._deliver(queue.pop(0))
            queue.extend(self.transport.release_due())

    def _deliver(self, packet: Packet) -> None:
        self.transport.mark_delivered()
        if self.mark.intercepts(packet.sender, packet.recipient):
            try:
                packet, fetched = self.mark.relay(packet, self.now)
            except RatchetLabError as e:
                self._emit(MARK, "intercept", {"packet": packet.seq, "from": packet.sender, "to": packet.recipient}, error=e)
                self._outcomes[packet.seq].append(REJECTED)
                return
            if fetched is not None:
                self._fetched(MARK, fetched)
            self._emit(MARK, "intercept", {"packet": packet.seq, "from": packet.sender, "to": packet.recipient})

        recipient = self.parties[packet.recipient]
        detail = {"from": packet.sender, "packet": packet.seq, "copy": packet.copy, "tampered": packet.tampered}
        try:
            envelope = open_envelope(packet.data)
            if envelope.kind == EnvelopeKind.INITIAL:
                existing = recipient.sessions.get(packet.sender)
                session, result = establish_inbound(
                    recipient.keys, envelope, packet.sender, recipient.rng, self.max_skip, existing=existing
                )
                if existing is not None and session is not existing:
                    logger.info(f"'{recipient.user_id}' replaces its session with '{packet.sender}'")
                recipient.sessions[packet.sender] = session
                plaintext, dh_step, msg_index, kind = result.plaintext, result.dh_step, result.msg_index, "initial"
            else:
                session = recipient.sessions.get(packet.sender)
                if session is None:
                    raise NoSessionError(f"no session with '{packet.sender}'")
                result = receive(session, packet.data, recipient.rng, self.max_skip)
                plaintext, dh_step, msg_index, kind = result.plaintext, result.dh_step, result.msg_index, "normal"
        except RatchetLabError as e:
            logger.warning(
                f"'{recipient.user_id}' rejected packet {packet.seq} from '{packet.sender}': {e.reason}"
            )
            self._emit(recipient.user_id, "receive", detail, error=e)
            self._outcomes[packet.seq].append(REJECTED)
            return

        detail.update({"dh_step": dh_step, "msg_index": msg_index, "kind": kind})
        if plaintext != self.texts.get(packet.seq):
            detail["mismatch"] = True
            self._failures.append(f"packet {packet.seq}: '{recipient.user_id}' recovered a different plaintext")
        self.delivered[recipient.user_id].append(plaintext)
        self._emit(recipient.user_id, "receive", detail)
        self._outcomes[packet.seq].append(OK)

    def _rotate(self, position: int, event: ScriptEvent) -> None:
        try:
            spk_id = self.parties[event.user].rotate(self.registry, self.now)
        except RatchetLabError as e:
            self._emit(event.user, "rotate_spk", error=e)
            return
        self._emit(event.user, "rotate_spk", {
            "spk_id": spk_id,
            "retained": self.registry.retained_spk_ids(event.user),
        })

    def _replenish(self, position: int, event: ScriptEvent) -> None:
        try:
            pool = self.parties[event.user].replenish(self.registry, event.n)
        except RatchetLabError as e:
            self._emit(event.user, "replenish", {"n": event.n}, error=e)
            return
        self._emit(event.user, "replenish", {"n": event.n, "pool": pool, "auto": False})

    def _mark_mitm(self, position: int, event: ScriptEvent) -> None:
        a, b = event.pair
        self.mark.target(a, b)
        self._emit(MARK, "mark_mitm", {"pair": [a, b]})

    def _verify_codes(self, position: int, event: ScriptEvent) -> None:
        a, b = event.pair
        session_a = self.parties[a].sessions.get(b)
        session_b = self.parties[b].sessions.get(a)
        if session_a is None or session_b is None:
            error = NoSessionError(f"'{a}' and '{b}' have no session to verify")
            self._emit(a, "verify_codes", {"peer": b}, error=error)
            if event.expect is not None:
                self._failures.append(f"script event {position}: codes could not be compared")
            return

        code_a = safety_code(session_a.ik_own, a, session_a.ik_remote, b)
        code_b = safety_code(session_b.ik_own, b, session_b.ik_remote, a)
        result = "match" if code_a == code_b else "mismatch"
        self._emit(a, "verify_codes", {
            "peer": b,
            "result": result.upper(),
            "codes": [code_a.grouped(), code_b.grouped()],
        })
        if event.expect is not None and event.expect != result:
            self._failures.append(f"script event {position}: expected codes to {event.expect}, got {result}")

    def _tick(self, position: int, event: ScriptEvent) -> None:
        self.now += 1
        self._emit(CLOCK, "tick", {"now": self.now})

    def _check_expectations(self) -> None:
        """First delivered copy decides the outcome; any further copy must be rejected"""
        for seq, event in sorted(self._expectations.items()):
            expected = event.expected_outcome()
            outcomes = self._outcomes.get(seq, [])
            if event.policy.action == PolicyAction.DROP and seq in self.texts:
                continue
            if not outcomes:
                self._failures.append(f"packet {seq} ({event.sender}->{event.to}) was never delivered")
                continue
            if outcomes[0] != expected:
                self._failures.append(
                    f"packet {seq} ({event.sender}->{event.to}): expected {expected}, got {outcomes[0]}"
                )
            if any(outcome != REJECTED for outcome in outcomes[1:]):
                self._failures.append(f"packet {seq} ({event.sender}->{event.to}) was accepted more than once")


def run(scenario: Scenario, seed: Optional[int] = None) -> Transcript:
    """Execute a scenario once and return its transcript"""
    return Simulation(scenario, seed=seed).run()
