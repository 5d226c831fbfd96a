import orjson
import pytest

from ratchetlab.cli.error_handler import (
    EXIT_COMPONENT_ERROR,
    EXIT_UNEXPECTED_ERROR,
    handle_cli_errors
)
from ratchetlab.main import (
    VERSION,
    build_parser,
    main
)


@pytest.fixture
def scenario_file(tmp_path):
    script = [
        {"kind": "send", "from": "adam", "to": "bud", "text": "hello bud"},
        {"kind": "send", "from": "bud", "to": "adam", "text": "hello adam"},
        {"kind": "send", "from": "adam", "to": "bud", "text": "flipped", "policy": {"action": "tamper", "byte_index": 50}},
        {"kind": "verify_codes", "pair": ["adam", "bud"], "expect": "match"},
    ]
    path = tmp_path / "scenario.json"
    path.write_bytes(orjson.dumps({"parties": ["adam", "bud"], "seed": 11, "script": script}))
    return path


def test_vectors_pass(capsys):
    assert main(["vectors"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") >= 3


def test_run_writes_a_transcript(scenario_file, tmp_path, capsys):
    transcript = tmp_path / "run.jsonl"
    assert main(["run", str(scenario_file), "--transcript", str(transcript)]) == 0

    summary = orjson.loads(capsys.readouterr().out)
    assert summary["failures"] == []
    assert [entry["reason"] for entry in summary["rejected"]] == ["authentication-failed"]
    assert len(transcript.read_bytes().splitlines()) == summary["events"]


def test_run_reports_failed_expectations(tmp_path, capsys):
    path = tmp_path / "wrong.json"
    script = [{"kind": "send", "from": "adam", "to": "bud", "text": "hi", "expect": "rejected"}]
    path.write_bytes(orjson.dumps({"parties": ["adam", "bud"], "script": script}))
    assert main(["run", str(path)]) == 1
    assert len(orjson.loads(capsys.readouterr().out)["failures"]) == 1


def test_metadata_from_transcript(scenario_file, tmp_path, capsys):
    transcript = tmp_path / "run.jsonl"
    main(["run", str(scenario_file), "--transcript", str(transcript)])
    capsys.readouterr()

    assert main(["metadata", str(transcript)]) == 0
    reports = orjson.loads(capsys.readouterr().out)
    [adam_to_bud] = reports["adam"]
    assert adam_to_bud["peer"] == "bud"
    assert (adam_to_bud["fetches"], adam_to_bud["relays"]) == (1, 2)


def test_attack_suite_passes(scenario_file, capsys):
    assert main(["attack", str(scenario_file), "--seed", "3"]) == 0
    report = orjson.loads(capsys.readouterr().out)
    assert report["pair"] == ["adam", "bud"]
    assert {name: verdict["result"] for name, verdict in report["verdicts"].items()} == {
        "confidentiality": "PASS",
        "integrity": "PASS",
        "authenticity": "PASS",
    }


def test_missing_scenario_is_a_component_error(tmp_path):
    assert main(["run", str(tmp_path / "nope.json")]) == EXIT_COMPONENT_ERROR
    assert main(["metadata", str(tmp_path / "nope.jsonl")]) == EXIT_COMPONENT_ERROR


def test_unexpected_errors_have_their_own_exit_code():
    @handle_cli_errors
    def broken():
        raise KeyError("boom")

    assert broken() == EXIT_UNEXPECTED_ERROR


def test_version_and_log_level(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--version"])
    assert VERSION in capsys.readouterr().out
    args = build_parser().parse_args(["--log-level", "debug", "vectors"])
    assert args.log_level == "DEBUG"
