"""
What the server learns without ever seeing a plaintext: who talks to whom,
how often, how recently.
"""
import logging

from typing import (
    Dict,
    Optional
)

from ratchetlab.models.registry.records import (
    MetadataAction,
    MetadataEvent,
    MetadataReport
)
from ratchetlab.models.sim.scenario import (
    MetadataDemoReport,
    Scenario,
    Transcript
)
from ratchetlab.utils.registry.prekey_registry import fold_metadata_events
from ratchetlab.utils.sim.harness import Simulation

logger = logging.getLogger(__name__)

# Texts shorter than this can show up in random ciphertext by chance
MIN_OBSERVABLE_TEXT = 8

_SERVER_VISIBLE = {
    "fetch_bundle": MetadataAction.FETCH_BUNDLE,
    "relay": MetadataAction.RELAY_MESSAGE,
}


def fold_metadata(transcript: Transcript) -> Dict[str, MetadataReport]:
    """Rebuild every user's metadata report from the transcript alone"""
    events = [
        MetadataEvent(actor=event.actor, action=_SERVER_VISIBLE[event.action], peer=event.detail["peer"], at=event.at)
        for event in transcript.events
        if event.ok and event.action in _SERVER_VISIBLE
    ]
    actors = sorted({event.actor for event in events})
    return {actor: fold_metadata_events(actor, events) for actor in actors}


def plaintext_bytes_observed(simulation: Simulation) -> int:
    """Plaintext bytes that appear verbatim in anything the server relayed"""
    observed = 0
    for packet in simulation.relayed:
        text = simulation.texts.get(packet.seq, b"")
        if len(text) < MIN_OBSERVABLE_TEXT:
            continue
        if any(text in relayed.data for relayed in simulation.relayed):
            observed += len(text)
    return observed


def metadata_demo(scenario: Scenario, seed: Optional[int] = None) -> MetadataDemoReport:
    """Run `scenario` and report the server's view of every registered user"""
    simulation = Simulation(scenario, seed=seed)
    simulation.run()
    registry = simulation.registry
    reports = {user_id: registry.metadata_report(user_id) for user_id in registry.users()}
    relay_events = sum(
        1
        for user_id in registry.users()
        for event in registry.metadata_log(user_id)
        if event.action == MetadataAction.RELAY_MESSAGE
    )
    report = MetadataDemoReport(
        reports=reports,
        relay_events=relay_events,
        plaintext_bytes_observed=plaintext_bytes_observed(simulation),
    )
    logger.info(
        f"Server metadata: {relay_events} relays across {len(reports)} users, "
        f"{report.plaintext_bytes_observed} plaintext bytes observed"
    )
    return report
