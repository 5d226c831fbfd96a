"""
Mark's three attacks against one pair of users. Each one runs its own
simulation from the same seed, so the verdicts do not depend on each other.
"""
import logging

from typing import (
    List,
    Optional,
    Sequence,
    Tuple
)

from ratchetlab.core import settings
from ratchetlab.core.errors import ScenarioConfigError
from ratchetlab.models.sim.scenario import (
    AttackReport,
    AttackVerdict,
    Scenario,
    ScriptEvent,
    ScriptEventKind,
    PolicyAction,
    TransportPolicy
)
from ratchetlab.utils.sim.harness import Simulation

logger = logging.getLogger(__name__)

CONVERSATION_LENGTH = 8


def _conversation(pair: Sequence[str], length: int = CONVERSATION_LENGTH) -> List[ScriptEvent]:
    """Alternating bursts: a, a, b, a, b, b, a, b ..."""
    a, b = pair
    order = [a, a, b, a, b, b, a, b]
    events = []
    for i in range(length):
        sender = order[i % len(order)]
        receiver = b if sender == a else a
        events.append(ScriptEvent(
            kind=ScriptEventKind.SEND,
            sender=sender,
            to=receiver,
            text=f"{sender} to {receiver}, message {i}: meet at the usual place",
        ))
    return events


def _confidentiality(pair: Sequence[str], seed: int) -> AttackVerdict:
    """Everything Mark captured, plus every public key he could ask the server for"""
    simulation = Simulation(Scenario(parties=list(pair), script=_conversation(pair), seed=seed))
    transcript = simulation.run()
    mark = simulation.mark

    leaked = sum(
        1
        for text in simulation.texts.values()
        if any(text in packet.data for packet in mark.captured)
    )
    known_keys = []
    for user_id in pair:
        known_keys.append(simulation.registry.active_signed_prekey(user_id).public)
        known_keys.append(simulation.parties[user_id].identity.public)
    recovered = mark.public_key_attack(known_keys)

    passed = leaked == 0 and recovered == 0 and not transcript.failures
    return AttackVerdict(name="confidentiality", passed=passed, detail={
        "captured": len(mark.captured),
        "plaintexts_in_capture": leaked,
        "decrypted_with_public_data": recovered,
    })


def _integrity(pair: Sequence[str], seed: int) -> AttackVerdict:
    """Flip one bit in every other message, at a different byte each time"""
    script = _conversation(pair)
    tampered_script = []
    for i, event in enumerate(script):
        if i > 0 and i % 2 == 1:
            policy = TransportPolicy(action=PolicyAction.TAMPER, byte_index=7 + 13 * i)
            event = event.model_copy(update={"policy": policy})
        tampered_script.append(event)
    simulation = Simulation(Scenario(parties=list(pair), script=tampered_script, seed=seed))
    transcript = simulation.run()

    receives = transcript.of_action("receive")
    tampered = [event for event in receives if event.detail.get("tampered")]
    untouched = [event for event in receives if not event.detail.get("tampered")]
    passed = (
        bool(tampered)
        and all(not event.ok for event in tampered)
        and all(event.ok for event in untouched)
    )
    return AttackVerdict(name="integrity", passed=passed, detail={
        "tampered": len(tampered),
        "tampered_rejected": sum(1 for event in tampered if not event.ok),
        "untouched": len(untouched),
        "untouched_accepted": sum(1 for event in untouched if event.ok),
    })


def _codes(pair: Sequence[str], seed: int, mitm: bool) -> Tuple[Optional[str], bool, int]:
    script = []
    if mitm:
        script.append(ScriptEvent(kind=ScriptEventKind.MARK_MITM, pair=list(pair)))
    script.extend(_conversation(pair))
    script.append(ScriptEvent(kind=ScriptEventKind.VERIFY_CODES, pair=list(pair)))
    simulation = Simulation(Scenario(parties=list(pair), script=script, seed=seed))
    transcript = simulation.run()
    verify = transcript.of_action("verify_codes")[-1]
    delivered = all(event.ok for event in transcript.of_action("receive"))
    return verify.detail.get("result"), delivered, len(simulation.mark.learned)


def _authenticity(pair: Sequence[str], seed: int) -> AttackVerdict:
    """Bundle substitution goes unnoticed by the transport; only comparing codes reveals it"""
    honest_result, honest_delivered, _ = _codes(pair, seed, mitm=False)
    mitm_result, mitm_delivered, learned = _codes(pair, seed, mitm=True)
    passed = (
        honest_result == "MATCH"
        and honest_delivered
        and mitm_result == "MISMATCH"
        and mitm_delivered
    )
    return AttackVerdict(name="authenticity", passed=passed, detail={
        "honest_codes": honest_result,
        "mitm_codes": mitm_result,
        "mitm_delivery_succeeded": mitm_delivered,
        "messages_read_by_mark": learned,
    })


def mark_attack_suite(pair: Sequence[str], seed: int = settings.DEFAULT_SEED) -> AttackReport:
    if len(pair) != 2 or pair[0] == pair[1]:
        raise ScenarioConfigError(f"attack suite needs two distinct users, got {list(pair)}")
    logger.info(f"Running attack suite against {pair[0]}/{pair[1]} with seed {seed}")
    report = AttackReport(pair=list(pair), verdicts=[
        _confidentiality(pair, seed),
        _integrity(pair, seed),
        _authenticity(pair, seed),
    ])
    for verdict in report.verdicts:
        log = logger.info if verdict.passed else logger.warning
        log(f"{verdict.name}: {'PASS' if verdict.passed else 'FAIL'}")
    return report
