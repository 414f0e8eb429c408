import json

import pytest

from surgkit.records import (
    ConversationParadigm,
    InstructionRecord,
    RecordError,
    SubTask,
    Turn,
    dump_records,
    load_records,
    record_from_json,
    record_to_json,
)


def make_record(record_id="r1"):
    return InstructionRecord(
        record_id=record_id,
        frame_id="f1",
        paradigm=ConversationParadigm.GROUNDING_QA,
        subtask=SubTask.INSTRUMENT_CATEGORY,
        turns=[
            Turn.make("human", "Where is the probe? Answer the question with just a bounding box."),
            Turn.make("assistant", "probe [0.10, 0.20, 0.30, 0.40]"),
        ],
        template_id="gq-ic-01",
        source="synthetic",
    )


def test_turn_make_derives_boxes_from_text():
    turn = Turn.make("assistant", "probe [0.10, 0.20, 0.30, 0.40]")
    assert len(turn.boxes) == 1
    assert turn.boxes[0][0] == "probe"
    assert turn.boxes[0][1].as_tuple() == (0.10, 0.20, 0.30, 0.40)


def test_turn_rejects_bad_role_and_newlines():
    with pytest.raises(RecordError):
        Turn.make("system", "hello")
    with pytest.raises(RecordError):
        Turn.make("human", "two\nlines")


def test_record_requires_alternation_human_first():
    human = Turn.make("human", "q")
    assistant = Turn.make("assistant", "a")
    with pytest.raises(RecordError, match="alternation"):
        InstructionRecord("r", "f", ConversationParadigm.VISUAL_QA, SubTask.INSTRUMENT_MOTION,
                          [assistant, human])
    with pytest.raises(RecordError, match="assistant turn"):
        InstructionRecord("r", "f", ConversationParadigm.VISUAL_QA, SubTask.INSTRUMENT_MOTION,
                          [human])
    with pytest.raises(RecordError, match="no turns"):
        InstructionRecord("r", "f", ConversationParadigm.VISUAL_QA, SubTask.INSTRUMENT_MOTION, [])


def test_record_rejects_unknown_provenance():
    with pytest.raises(RecordError, match="provenance"):
        InstructionRecord(
            "r", "f", ConversationParadigm.VISUAL_QA, SubTask.INSTRUMENT_MOTION,
            [Turn.make("human", "q"), Turn.make("assistant", "a")],
            provenance="made-up",
        )


def test_json_roundtrip_is_identity():
    record = make_record()
    back = record_from_json(json.loads(json.dumps(record_to_json(record))))
    assert back == record


def test_dump_load_roundtrip_multiple():
    records = [make_record("r1"), make_record("r2")]
    text = dump_records(records)
    assert text.endswith("\n")
    assert len(text.splitlines()) == 2
    assert list(load_records(text.splitlines())) == records


def test_load_records_reports_bad_line():
    with pytest.raises(RecordError, match="line 2"):
        list(load_records([json.dumps(record_to_json(make_record())), "{broken"]))


def test_qa_pairs_and_last_answer():
    record = make_record()
    pairs = record.qa_pairs()
    assert len(pairs) == 1
    assert pairs[0][0].role == "human"
    assert record.last_answer() == "probe [0.10, 0.20, 0.30, 0.40]"
