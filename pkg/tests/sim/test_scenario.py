import pytest

from pydantic import ValidationError

from ratchetlab.models.sim.scenario import (
    PolicyAction,
    Scenario,
    ScriptEventKind
)


def _scenario(**overrides):
    document = {
        "parties": ["adam", "bud"],
        "seed": 7,
        "script": [
            {"kind": "send", "from": "adam", "to": "bud", "text": "hi"},
            {"kind": "send", "from": "bud", "to": "adam", "text": "yo", "policy": {"action": "tamper", "byte_index": 3}},
            {"kind": "verify_codes", "pair": ["adam", "bud"], "expect": "match"},
        ],
    }
    document.update(overrides)
    return Scenario.model_validate(document)


def test_json_document_is_accepted():
    scenario = _scenario()
    assert scenario.script[0].sender == "adam"
    assert scenario.script[1].policy.action == PolicyAction.TAMPER
    assert scenario.script[2].kind == ScriptEventKind.VERIFY_CODES


def test_default_expectations():
    scenario = _scenario()
    assert scenario.script[0].expected_outcome() == "ok"
    assert scenario.script[1].expected_outcome() == "rejected"


@pytest.mark.parametrize("overrides", [
    {"parties": ["adam", "adam"]},
    {"parties": ["adam", "mark"]},
    {"parties": ["adam", "carol"]},
    {"attack_pair": ["adam", "zed"]},
    {"script": [{"kind": "send", "from": "adam", "to": "adam", "text": "me"}]},
    {"script": [{"kind": "send", "from": "adam", "text": "nobody"}]},
    {"script": [{"kind": "replenish", "user": "adam"}]},
    {"script": [{"kind": "verify_codes", "pair": ["adam", "bud"], "expect": "ok"}]},
])
def test_invalid_scenarios(overrides):
    with pytest.raises(ValidationError):
        _scenario(**overrides)
