"""
Mechanical checks of the ratchet-step choreography in a transcript.

General rule: a party's send is a DH step iff that party performed a DH
step towards the same peer since its previous send. The first send to a
peer always is one, and so is anything after a new ratchet key arrived.
The envelope kind plays no part: an initiator that has not heard back
repeats the handshake around symmetric steps. Under deliver-all this
is exactly the four color rules for a two-party conversation:

  green after green  -> green's symmetric step
  green after white  -> green's DH step
  white after white  -> white's symmetric step
  white after green  -> white's DH step
"""
from typing import (
    Dict,
    List,
    Sequence,
    Tuple
)

from ratchetlab.models.sim.scenario import (
    Transcript,
    TranscriptEvent
)
from ratchetlab.utils.session.lifecycle import (
    DH_STEP,
    SYMMETRIC_STEP
)


def check_ratchet_rules(transcript: Transcript) -> List[str]:
    """Every send whose step label contradicts the sender's ratchet history"""
    pending: Dict[Tuple[str, str], bool] = {}
    violations = []
    for event in transcript.events:
        if not event.ok:
            continue
        if event.action == "receive" and event.detail.get("dh_step"):
            pending[(event.actor, event.detail["from"])] = True
        elif event.action == "send":
            key = (event.actor, event.detail["to"])
            expected = DH_STEP if pending.get(key, True) else SYMMETRIC_STEP
            if event.detail.get("step") != expected:
                violations.append(
                    f"transcript event {event.seq}: {event.actor}->{event.detail['to']} "
                    f"labelled {event.detail.get('step')}, expected {expected}"
                )
            pending[key] = False
    return violations


def color_transitions(events: Sequence[TranscriptEvent], pair: Sequence[str]) -> List[Dict[str, str]]:
    """
    Consecutive sends between `pair` as color transitions. pair[0] is green,
    pair[1] is white. Each entry names the rule that applies and the step
    that rule demands next to the step actually recorded.
    """
    colors = {pair[0]: "green", pair[1]: "white"}
    transitions = []
    previous = None
    for event in events:
        if event.action != "send" or not event.ok:
            continue
        if event.actor not in colors or event.detail.get("to") not in colors:
            continue
        color = colors[event.actor]
        if previous is None:
            expected = DH_STEP
            rule = f"{color} opens"
        else:
            expected = SYMMETRIC_STEP if previous == color else DH_STEP
            rule = f"{color} after {previous}"
        transitions.append({"rule": rule, "expected": expected, "observed": event.detail.get("step")})
        previous = color
    return transitions


def check_color_rules(events: Sequence[TranscriptEvent], pair: Sequence[str]) -> List[str]:
    """The four color rules, valid only when every message is delivered in order"""
    return [
        f"send {position}: {transition['rule']} should be {transition['expected']}, was {transition['observed']}"
        for position, transition in enumerate(color_transitions(events, pair))
        if transition["expected"] != transition["observed"]
    ]
