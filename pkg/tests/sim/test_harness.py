import orjson
import pytest

from ratchetlab.core.errors import ScenarioConfigError
from ratchetlab.models.sim.scenario import Scenario
from ratchetlab.utils.session.lifecycle import (
    DH_STEP,
    SYMMETRIC_STEP
)
from ratchetlab.utils.sim.harness import (
    Simulation,
    load_scenario,
    read_transcript,
    run,
    transcript_bytes,
    write_transcript
)
from ratchetlab.utils.sim.rules import check_color_rules


def _send(sender, to, text, **extra):
    return {"kind": "send", "from": sender, "to": to, "text": text, **extra}


def _conversation(order, parties=("adam", "bud")):
    a, b = parties
    return [_send(s, b if s == a else a, f"{s} says {i}") for i, s in enumerate(order)]


def _scenario(script, parties=("adam", "bud"), **extra):
    return Scenario.model_validate({"parties": list(parties), "seed": 3, "script": script, **extra})


def test_deliver_all_recovers_every_plaintext_exactly_once():
    order = ["adam", "adam", "bud", "adam", "bud", "bud", "adam"]
    simulation = Simulation(_scenario(_conversation(order)))
    transcript = simulation.run()

    assert transcript.failures == []
    assert transcript.rejected() == []
    for recipient in ("adam", "bud"):
        expected = [f"{s} says {i}".encode() for i, s in enumerate(order) if s != recipient]
        assert simulation.delivered[recipient] == expected


def test_bursty_exchange_follows_the_color_rules():
    order = ["bud", "bud", "adam", "adam", "bud", "adam", "adam", "bud"]
    transcript = run(_scenario(_conversation(order, parties=("bud", "adam")), parties=("bud", "adam")))

    steps = [event.detail["step"] for event in transcript.of_action("send")]
    assert steps == [DH_STEP, SYMMETRIC_STEP, DH_STEP, SYMMETRIC_STEP, DH_STEP, DH_STEP, SYMMETRIC_STEP, DH_STEP]
    assert check_color_rules(transcript.events, ["bud", "adam"]) == []


@pytest.mark.slow
def test_two_hundred_messages_keep_the_rules():
    order = (["adam"] * 3 + ["bud"] * 2 + ["adam", "bud"] * 5 + ["bud"] * 5) * 10
    transcript = run(_scenario(_conversation(order)))
    assert len(transcript.of_action("receive")) == 200
    assert transcript.failures == []
    assert check_color_rules(transcript.events, ["adam", "bud"]) == []


def test_one_tampered_message_is_isolated():
    script = _conversation(["adam", "bud", "adam", "adam", "bud"])
    script[2]["policy"] = {"action": "tamper", "byte_index": 60}
    transcript = run(_scenario(script))

    assert transcript.failures == []
    [rejected] = transcript.rejected()
    assert rejected.action == "receive" and rejected.detail["packet"] == 3
    assert all(event.ok for event in transcript.of_action("receive") if event.detail["packet"] > 3)


def test_same_seed_gives_identical_transcripts():
    script = _conversation(["adam", "bud", "bud", "adam"])
    scenario = _scenario(script + [{"kind": "verify_codes", "pair": ["adam", "bud"]}])
    assert transcript_bytes(run(scenario)) == transcript_bytes(run(scenario))
    assert transcript_bytes(run(scenario, seed=4)) != transcript_bytes(run(scenario))


def test_reorder_and_duplicates_within_bounds():
    script = _conversation(["adam"] * 6 + ["bud"] * 3)
    script[1]["policy"] = {"action": "reorder", "position": 3}
    script[2]["policy"] = {"action": "duplicate"}
    script[6]["policy"] = {"action": "reorder", "position": 1}
    script[7]["policy"] = {"action": "duplicate"}
    simulation = Simulation(_scenario(script))
    transcript = simulation.run()

    assert transcript.failures == []
    assert [event.detail["copy"] for event in transcript.rejected()] == [2, 2]
    for party in simulation.parties.values():
        for session in party.sessions.values():
            assert session.ratchet.skipped == {}


def test_dropped_message_does_not_block_later_ones():
    script = _conversation(["adam"] * 4)
    script[1]["policy"] = {"action": "drop"}
    simulation = Simulation(_scenario(script))
    transcript = simulation.run()

    assert transcript.failures == []
    assert len(simulation.delivered["bud"]) == 3
    assert len(simulation.parties["bud"].sessions["adam"].ratchet.skipped) == 1


def test_reordered_first_message_does_not_break_the_session():
    script = _conversation(["adam", "adam", "adam", "bud"])
    script[0]["policy"] = {"action": "reorder", "position": 2}
    simulation = Simulation(_scenario(script))
    transcript = simulation.run()

    assert transcript.failures == []
    assert transcript.rejected() == []
    assert simulation.delivered["bud"] == [b"adam says 1", b"adam says 2", b"adam says 0"]
    assert simulation.delivered["adam"] == [b"bud says 3"]
    receives = {event.detail["packet"]: event.detail for event in transcript.of_action("receive")}
    assert receives[2]["dh_step"] is True
    assert (receives[1]["kind"], receives[1]["dh_step"]) == ("initial", False)
    assert simulation.parties["bud"].sessions["adam"].ratchet.skipped == {}


def test_dropped_first_message_does_not_break_the_session():
    script = _conversation(["adam", "adam", "adam", "bud", "adam"])
    script[0]["policy"] = {"action": "drop"}
    simulation = Simulation(_scenario(script))
    transcript = simulation.run()

    assert transcript.failures == []
    assert transcript.rejected() == []
    assert simulation.delivered["bud"] == [b"adam says 1", b"adam says 2", b"adam says 4"]
    assert simulation.delivered["adam"] == [b"bud says 3"]
    assert len(simulation.parties["bud"].sessions["adam"].ratchet.skipped) == 1


def test_handshake_is_repeated_until_the_first_reply():
    transcript = run(_scenario(_conversation(["adam", "adam", "bud", "adam", "bud"])))
    kinds = [event.detail["kind"] for event in transcript.of_action("send")]
    assert kinds == ["initial", "initial", "normal", "normal", "normal"]
    assert transcript.failures == []


def test_message_to_a_purged_signed_prekey_is_rejected():
    script = [_send("adam", "bud", "late", policy={"action": "reorder", "position": 100}, expect="rejected")]
    script += [{"kind": "tick"}, {"kind": "rotate_spk", "user": "bud"}]
    script += [{"kind": "tick"}] * 15
    script += [{"kind": "rotate_spk", "user": "bud"}]
    transcript = run(_scenario(script))

    assert transcript.failures == []
    [rejected] = transcript.rejected()
    assert rejected.reason == "unknown-spk"


def test_rotation_does_not_disturb_running_sessions():
    script = _conversation(["adam", "bud"])
    script += [{"kind": "rotate_spk", "user": "bud"}, {"kind": "tick"}]
    script += _conversation(["adam", "bud", "adam"])
    transcript = run(_scenario(script))
    assert transcript.failures == []
    assert transcript.of_action("rotate_spk")[0].detail["spk_id"] == 2


def test_pool_is_topped_up_when_it_runs_low():
    script = [_send("adam", "carol", "hi"), _send("bud", "carol", "hey")]
    simulation = Simulation(_scenario(script, parties=("adam", "bud", "carol"), opk_count=6))
    transcript = simulation.run()

    [replenish] = transcript.of_action("replenish")
    assert replenish.actor == "carol" and replenish.detail["auto"]
    assert simulation.registry.pool_size("carol") == 4 + simulation.batch


def test_pool_can_run_dry_when_auto_replenish_is_off():
    script = [_send(sender, "carol", "hi") for sender in ("adam", "bud")]
    simulation = Simulation(_scenario(script, parties=("adam", "bud", "carol"), opk_count=1, auto_replenish=False))
    transcript = simulation.run()
    assert transcript.failures == []
    assert simulation.registry.pool_size("carol") == 0


def test_codes_match_for_honest_sessions():
    script = _conversation(["adam", "bud"]) + [{"kind": "verify_codes", "pair": ["adam", "bud"], "expect": "match"}]
    transcript = run(_scenario(script))
    assert transcript.failures == []
    assert transcript.of_action("verify_codes")[0].detail["result"] == "MATCH"


def test_bundle_substitution_is_only_visible_in_the_codes():
    script = [{"kind": "mark_mitm", "pair": ["adam", "bud"]}]
    script += _conversation(["adam", "bud", "bud", "adam"])
    script += [{"kind": "verify_codes", "pair": ["adam", "bud"], "expect": "mismatch"}]
    simulation = Simulation(_scenario(script))
    transcript = simulation.run()

    assert transcript.failures == []
    assert all(event.ok for event in transcript.of_action("receive"))
    assert len(simulation.mark.learned) == 4


def test_verifying_without_sessions_is_rejected():
    transcript = run(_scenario([{"kind": "verify_codes", "pair": ["adam", "bud"], "expect": "match"}]))
    assert transcript.rejected()[0].reason == "no-session"
    assert transcript.failures


def test_unmet_expectation_is_reported():
    transcript = run(_scenario([_send("adam", "bud", "hi", expect="rejected")]))
    assert len(transcript.failures) == 1


def test_transcript_file_round_trip(tmp_path):
    transcript = run(_scenario(_conversation(["adam", "bud"])))
    path = tmp_path / "out.jsonl"
    write_transcript(transcript, path)

    lines = path.read_bytes().splitlines()
    assert len(lines) == len(transcript.events)
    assert orjson.loads(lines[0])["action"] == "register"
    assert read_transcript(path).events == transcript.events


def test_scenario_file_errors(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    undeclared = tmp_path / "undeclared.json"
    undeclared.write_bytes(orjson.dumps({"parties": ["adam", "bud"], "script": [_send("adam", "zed", "hi")]}))

    for path in (broken, undeclared, tmp_path / "missing.json"):
        with pytest.raises(ScenarioConfigError):
            load_scenario(path)


def test_a_simulation_runs_once():
    simulation = Simulation(_scenario([]))
    simulation.run()
    with pytest.raises(ScenarioConfigError):
        simulation.run()
