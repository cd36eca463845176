from __future__ import annotations

import json
from dataclasses import replace
from pathlib import Path

import pytest

from bargainlab.engine import InvalidEdit
from bargainlab.persistence import (
    CorruptRecord,
    IoFailure,
    UnsupportedVersion,
    counterfactual_rerun,
    dumps,
    load,
    loads,
    rerun,
    save,
)

FIXTURES = Path(__file__).parent / "fixtures"


def test_round_trip(tmp_path, oracle_record):
    path = tmp_path / "sub" / "g.json"
    save(oracle_record, path)
    assert load(path) == oracle_record
    assert dumps(load(path)) == path.read_text()


def test_document_is_self_describing(oracle_record):
    doc = json.loads(dumps(oracle_record))
    assert doc["format_version"] == "1.1"
    assert doc["record_id"] == oracle_record.record_id and len(doc["record_id"]) == 16
    assert doc["backend"] == {"RED": "scripted:split_difference", "BLUE": "scripted:split_difference"}


def test_older_minor_version_loads_with_defaults(oracle_record):
    record = load(FIXTURES / "record_v1_0.json")
    assert record.parent is None and record.backend == {}
    assert record.transcript == oracle_record.transcript
    assert record.outcome == oracle_record.outcome


def test_unsupported_major_version(oracle_record):
    doc = json.loads(dumps(oracle_record))
    doc["format_version"] = "2.0"
    with pytest.raises(UnsupportedVersion):
        loads(json.dumps(doc))


def test_truncated_file_is_corrupt(tmp_path, oracle_record):
    path = tmp_path / "g.json"
    path.write_text(dumps(oracle_record)[:500])
    with pytest.raises(CorruptRecord):
        load(path)


def test_tampered_outcome_is_caught(oracle_record):
    doc = json.loads(dumps(oracle_record))
    doc["outcome"]["payoffs"]["RED"] = "50"
    with pytest.raises(CorruptRecord):
        loads(json.dumps(doc))
    doc = json.loads(dumps(oracle_record))
    doc["transcript"][-1]["raw"] = doc["transcript"][-1]["raw"].replace("ACCEPT", "NONE")
    with pytest.raises(CorruptRecord):
        loads(json.dumps(doc))


def test_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load(tmp_path / "absent.json")


def test_rerun_reproduces(oracle_record):
    assert dumps(rerun(oracle_record)) == dumps(oracle_record)


def test_identity_edit_reproduces_continuation(oracle_record):
    for turn in range(len(oracle_record.transcript)):
        derived = counterfactual_rerun(oracle_record, turn, oracle_record.transcript[turn].raw)
        assert [e.raw for e in derived.transcript] == [e.raw for e in oracle_record.transcript]
        assert derived.outcome == oracle_record.outcome
        assert derived.parent.edit_turn == turn


def test_edit_can_be_a_structured_message(oracle_record):
    from bargainlab.core import ResourceBundle, Trade

    msg = oracle_record.transcript[0].message
    trade = Trade(ResourceBundle(X=1), ResourceBundle(ZUP=90), msg.player_name)
    derived = counterfactual_rerun(oracle_record, 0, replace(msg, trade=trade))
    assert derived.transcript[0].message.trade.price("ZUP") == 90


def test_invalid_edits(oracle_record):
    with pytest.raises(InvalidEdit):
        counterfactual_rerun(oracle_record, 99, oracle_record.transcript[0].raw)
    too_expensive = oracle_record.transcript[0].raw.replace("ZUP: 100", "ZUP: 500")
    with pytest.raises(InvalidEdit):
        counterfactual_rerun(oracle_record, 0, too_expensive)


def test_no_temp_files_left(tmp_path, oracle_record):
    for _ in range(3):
        save(oracle_record, tmp_path / "g.json")
    assert [p.name for p in tmp_path.iterdir()] == ["g.json"]


def test_save_to_unwritable_location(tmp_path, oracle_record):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(IoFailure):
        save(oracle_record, blocker / "g.json")
