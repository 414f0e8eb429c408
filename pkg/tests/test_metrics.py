import json
import random

import pytest

import oracles
from surgkit.boxes import BoundingBox
from surgkit.metrics import (
    EvalError,
    EvalPair,
    JudgeError,
    ROUTING,
    StubJudge,
    accuracy,
    align_files,
    ap_at_50,
    bleu,
    cider_d,
    evaluate,
    judge_score,
    macro_f1,
    make_judge,
    mean_iou,
    meteor,
    meteor_pair,
    normalize_answer,
    normalize_metric_names,
    porter_stem,
    rouge1,
    rouge_l,
    tokenize,
)
from surgkit.records import ConversationParadigm, SubTask


def test_normalize_answer_examples():
    assert normalize_answer("Three.") == "3"
    assert normalize_answer("  Prograsp   Forceps ") == "prograsp forceps"
    assert normalize_answer("") == ""
    assert normalize_answer("IDLE") == "idle"
    assert normalize_answer("ten instruments") == "10 instruments"


def test_tokenize_drops_punctuation():
    assert tokenize("The instrument, a forceps!") == ["the", "instrument", "a", "forceps"]
    assert tokenize("") == []


def test_accuracy_three_of_four():
    preds = ["idle", "three", "kidney", "left-top"]
    refs = ["idle", "3", "kidney", "right-bottom"]
    assert accuracy(preds, refs) == pytest.approx(75.0)


def test_accuracy_rejects_misaligned_or_empty():
    with pytest.raises(ValueError):
        accuracy(["a"], ["a", "b"])
    with pytest.raises(ValueError):
        accuracy([], [])


def test_macro_f1_worked_example():
    refs = ["a", "a", "b", "b"]
    preds = ["a", "a", "b", "a"]
    # F1(a) = 0.8, F1(b) = 2/3, macro mean on the percent scale.
    assert macro_f1(preds, refs) == pytest.approx(220.0 / 3.0, abs=1e-9)
    assert macro_f1(preds, refs) == pytest.approx(oracles.macro_f1(preds, refs), abs=1e-9)


def test_macro_f1_classes_include_prediction_only_labels():
    refs = ["a", "a"]
    preds = ["a", "c"]
    # Class c has zero recallable references, dragging the macro mean down:
    # F1(a) = 2/3, F1(c) = 0.
    assert macro_f1(preds, refs) == pytest.approx(100.0 / 3.0, abs=1e-9)
    assert macro_f1(preds, refs) == pytest.approx(oracles.macro_f1(preds, refs), abs=1e-9)


def test_classification_applies_normalization():
    assert accuracy(["Three."], ["3"]) == pytest.approx(100.0)
    assert macro_f1(["Three."], ["3"]) == pytest.approx(100.0)


def test_meteor_identical_four_tokens():
    text = "the forceps grasps tissue"
    assert meteor([text], [text]) == pytest.approx(99.21875, abs=1e-9)


def test_meteor_stem_stage_aligns_inflections():
    assert meteor_pair("grasping", "grasped") == pytest.approx(0.5, abs=1e-12)
    assert meteor(["grasping"], ["grasped"]) == pytest.approx(50.0, abs=1e-9)


def test_meteor_no_overlap_is_zero():
    assert meteor_pair("kidney liver", "probe scissors") == 0.0


def test_meteor_fragmentation_penalty_orders_scrambles():
    reference = "the forceps grasps the kidney tissue"
    scrambled = "kidney the tissue grasps forceps the"
    assert meteor([scrambled], [reference]) < meteor([reference], [reference])


def test_rouge_worked_example():
    assert rouge1(["a b c"], ["a c b"]) == pytest.approx(100.0, abs=1e-9)
    assert rouge_l(["a b c"], ["a c b"]) == pytest.approx(200.0 / 3.0, abs=1e-9)


def test_rouge_empty_prediction_scores_zero():
    assert rouge1([""], ["a b"]) == 0.0
    assert rouge_l([""], ["a b"]) == 0.0


def test_bleu_echo_and_disjoint():
    corpus = ["the forceps grasps the kidney", "a probe retracts tissue near the liver"]
    assert bleu(corpus, corpus, max_n=4) == pytest.approx(100.0, abs=1e-9)
    assert bleu(["w x y z"], ["a b c d"], max_n=4) <= 1e-3


def test_bleu_brevity_penalty_applies_only_to_short_predictions():
    short = bleu(["a b"], ["a b c d"], max_n=2)
    long = bleu(["a b c d"], ["a b"], max_n=2)
    assert short < long


def test_cider_single_pair_degenerates_to_zero():
    # One reference means every n-gram's idf is log(1/1) = 0.
    assert cider_d(["the forceps"], ["the forceps"]) == 0.0


def test_cider_bounds_and_echo_dominance():
    refs = [
        "the forceps grasps the kidney",
        "a probe retracts tissue",
        "the scissors cut the duct",
        "the driver places a suture",
    ]
    off = ["tissue visible", "tissue visible", "tissue visible", "tissue visible"]
    echo = cider_d(refs, refs)
    assert 0.0 <= cider_d(off, refs) <= echo <= 10.0
    assert echo > 0.0


def test_detection_ap_counts_inclusive_half():
    ref = BoundingBox(0.0, 0.0, 1.0, 1.0)
    far_ref = BoundingBox(0.0, 0.0, 0.2, 0.2)
    preds = [
        "a [0.00, 0.00, 1.00, 1.00]",   # IoU 1.0
        "a [0.00, 0.00, 1.00, 0.60]",   # IoU 0.6
        "a [0.00, 0.00, 1.00, 0.49]",   # IoU 0.49
        "a [0.50, 0.50, 0.90, 0.90]",   # IoU 0.0
    ]
    assert ap_at_50(preds, [ref, ref, ref, far_ref]) == pytest.approx(50.0)
    assert ap_at_50(["a [0.00, 0.00, 1.00, 0.50]"], [ref]) == pytest.approx(100.0)
    assert ap_at_50(["a [0.00, 0.00, 1.00, 0.49]"], [ref]) == pytest.approx(0.0)


def test_mean_iou_unparseable_counts_zero_none_skipped():
    ref = BoundingBox(0.0, 0.0, 1.0, 1.0)
    preds = ["a [0.00, 0.00, 1.00, 1.00]", "no box here", "a [0.00, 0.00, 1.00, 1.00]"]
    assert mean_iou(preds, [ref, ref, None]) == pytest.approx(50.0)
    with pytest.raises(ValueError, match="every reference lacks a box"):
        mean_iou(["a [0.00, 0.00, 1.00, 1.00]"], [None])


def test_mean_iou_uses_first_parseable_box():
    ref = BoundingBox(0.0, 0.0, 0.5, 0.5)
    text = "a [0.00, 0.00, 0.50, 0.50] then b [0.60, 0.60, 0.90, 0.90]"
    assert mean_iou([text], [ref]) == pytest.approx(100.0)


def test_stub_judge_identity_and_disjoint():
    judge = StubJudge()
    assert judge.score("The kidney is visible.", "The kidney is visible.") == pytest.approx(100.0)
    assert judge.score("alpha beta", "gamma delta") == 0.0


class FlakyJudge:
    """Fails on every prediction marked bad."""

    def score(self, prediction, reference):
        if "bad" in prediction:
            raise JudgeError("cannot score")
        return 80.0


def test_judge_coverage_reports_scored_fraction():
    preds = ["ok one", "ok two", "bad three", "ok four"]
    refs = ["r"] * 4
    mean, coverage = judge_score(preds, refs, FlakyJudge())
    assert mean == pytest.approx(80.0)
    assert coverage == pytest.approx(0.75)


def test_make_judge_resolves_names():
    assert isinstance(make_judge("stub"), StubJudge)
    with pytest.raises(JudgeError):
        make_judge("nonsense")


def test_porter_stem_matches_frozen_reference_table():
    disagreements = {
        w: (porter_stem(w), s) for w, s in oracles.STEMS.items() if porter_stem(w) != s
    }
    assert disagreements == {}
    assert len(oracles.STEMS) > 800


def pair(record_id, paradigm, subtask, reference, prediction, box=None):
    return EvalPair(
        record_id=record_id,
        paradigm=paradigm,
        subtask=subtask,
        reference=reference,
        prediction=prediction,
        reference_box=box,
    )


def mixed_pairs():
    return [
        pair("f1#t000", ConversationParadigm.SINGLE_PHRASE, SubTask.INSTRUMENT_NUMBER,
             "three", "three"),
        pair("f1#t001", ConversationParadigm.SINGLE_PHRASE, SubTask.INSTRUMENT_NUMBER,
             "two", "three"),
        pair("f1#t002", ConversationParadigm.GROUNDING_QA, SubTask.INSTRUMENT_CATEGORY,
             "forceps [0.10, 0.10, 0.30, 0.30]", "forceps [0.10, 0.10, 0.30, 0.30]",
             box=BoundingBox(0.1, 0.1, 0.3, 0.3)),
        pair("f1#t003", ConversationParadigm.VISUAL_QA, SubTask.INSTRUMENT_MOTION,
             "The instrument is currently grasping.", "The instrument is grasping."),
        pair("f1#d000", ConversationParadigm.DETAILED_DESCRIPTION, SubTask.DESCRIPTION,
             "The forceps grasps the kidney.", "The forceps grasps the kidney."),
    ]


def test_evaluate_routes_metrics_per_paradigm():
    report = evaluate(mixed_pairs())
    assert set(report.buckets["single_phrase/IN"]) == {"Acc", "F"}
    assert set(report.buckets["grounding_qa/IC"]) == {"AP@50", "mIoU"}
    assert set(report.buckets["visual_qa/IM"]) == set(
        ROUTING[ConversationParadigm.VISUAL_QA]
    )
    assert set(report.buckets["detailed_description/Description"]) == {"judge", "judge_coverage"}
    assert report.pair_counts["single_phrase/IN"] == 2
    assert report.buckets["single_phrase/IN"]["Acc"] == pytest.approx(50.0)
    assert report.buckets["grounding_qa/IC"]["mIoU"] == pytest.approx(100.0)
    assert report.buckets["detailed_description/Description"]["judge"] == pytest.approx(100.0)
    assert report.buckets["detailed_description/Description"]["judge_coverage"] == pytest.approx(100.0)


def test_evaluate_marks_unrouted_metrics_inapplicable():
    report = evaluate(mixed_pairs(), metrics=["acc"])
    assert report.buckets["single_phrase/IN"]["Acc"] == pytest.approx(50.0)
    assert report.buckets["grounding_qa/IC"]["Acc"] == "inapplicable"
    assert report.buckets["visual_qa/IM"]["Acc"] == "inapplicable"


def test_evaluate_is_order_independent():
    pairs = mixed_pairs()
    shuffled = list(pairs)
    random.Random(7).shuffle(shuffled)
    assert evaluate(shuffled).as_json() == evaluate(pairs).as_json()


def test_evaluate_rejects_empty_and_unknown_metric():
    with pytest.raises(EvalError):
        evaluate([])
    with pytest.raises(EvalError, match="unknown metric"):
        evaluate(mixed_pairs(), metrics=["glue"])


def test_normalize_metric_names_aliases():
    assert normalize_metric_names(["f1", "BLEU", "rouge", "ap50", "miou"]) == [
        "F", "BLEU-4", "ROUGE-L", "AP@50", "mIoU",
    ]


def reference_line(record_id, text, paradigm="single_phrase", subtask="IN"):
    return json.dumps(
        {"record_id": record_id, "text": text, "paradigm": paradigm, "subtask": subtask}
    )


def transcript_line(record_id, text):
    return json.dumps({"record_id": record_id, "text": text})


def test_align_files_joins_on_record_id():
    refs = [reference_line(f"f1#t{i:03d}", f"answer {i}") for i in range(12)]
    transcript = [transcript_line(f"f1#t{i:03d}", f"guess {i}") for i in range(11, -1, -1)]
    pairs, unmatched_refs, unmatched_preds = align_files(refs, transcript)
    assert [p.record_id for p in pairs] == [f"f1#t{i:03d}" for i in range(12)]
    assert pairs[3].reference == "answer 3"
    assert pairs[3].prediction == "guess 3"
    assert unmatched_refs == [] and unmatched_preds == []


def test_align_files_tolerates_up_to_ten_percent():
    refs = [reference_line(f"r{i}", "x") for i in range(10)]
    transcript = [transcript_line(f"r{i}", "y") for i in range(9)]
    pairs, unmatched_refs, _ = align_files(refs, transcript)
    assert len(pairs) == 9
    assert unmatched_refs == ["r9"]
    with pytest.raises(EvalError, match="lack predictions"):
        align_files(refs, transcript[:7])


def test_align_files_extracts_reference_box_from_grounding_text():
    refs = [reference_line("g1", "forceps [0.10, 0.10, 0.30, 0.30]",
                           paradigm="grounding_qa", subtask="IC")]
    pairs, _, _ = align_files(refs, [transcript_line("g1", "forceps [0.10, 0.10, 0.30, 0.30]")])
    assert pairs[0].reference_box == BoundingBox(0.1, 0.1, 0.3, 0.3)


def test_align_files_accepts_full_records(corpus50):
    from surgkit.records import record_to_json

    records = corpus50[:10]
    refs = [json.dumps(record_to_json(r)) for r in records]
    transcript = [transcript_line(r.record_id, r.last_answer()) for r in records]
    pairs, _, _ = align_files(refs, transcript)
    assert len(pairs) == 10
    for record, p in zip(records, pairs):
        assert p.reference == record.last_answer()
        assert p.prediction == record.last_answer()
        assert p.paradigm is record.paradigm


def test_align_files_reports_line_numbers_and_duplicates():
    with pytest.raises(EvalError, match="references line 2"):
        align_files([reference_line("a", "x"), "not json"], [])
    with pytest.raises(EvalError, match="duplicate record_id"):
        align_files([reference_line("a", "x"), reference_line("a", "y")], [])
    with pytest.raises(EvalError, match="transcript line 1"):
        align_files([reference_line("a", "x")], ["{}"])


def corpus_metrics(predictions, references, reference_boxes):
    reference_boxes = [
        BoundingBox(*box) if box is not None else None for box in reference_boxes
    ]
    return {
        "Acc": accuracy(predictions, references),
        "F": macro_f1(predictions, references),
        "BLEU-3": bleu(predictions, references, max_n=3),
        "BLEU-4": bleu(predictions, references, max_n=4),
        "CIDEr": cider_d(predictions, references),
        "METEOR": meteor(predictions, references),
        "ROUGE-1": rouge1(predictions, references),
        "ROUGE-L": rouge_l(predictions, references),
        "mIoU": mean_iou(predictions, reference_boxes),
        "AP@50": ap_at_50(predictions, reference_boxes),
    }


def oracle_metrics(predictions, references, reference_boxes):
    return {
        "Acc": oracles.accuracy(predictions, references),
        "F": oracles.macro_f1(predictions, references),
        "BLEU-3": oracles.bleu(predictions, references, max_n=3),
        "BLEU-4": oracles.bleu(predictions, references, max_n=4),
        "CIDEr": oracles.cider(predictions, references),
        "METEOR": oracles.meteor(predictions, references),
        "ROUGE-1": oracles.rouge1(predictions, references),
        "ROUGE-L": oracles.rouge_l(predictions, references),
        "mIoU": oracles.mean_iou(predictions, reference_boxes),
        "AP@50": oracles.ap_at_50(predictions, reference_boxes),
    }


@pytest.mark.parametrize("seed", range(12))
def test_metrics_match_oracles_on_random_fixtures(seed):
    rng = random.Random(f"metrics:{seed}")
    predictions, references, reference_boxes = oracles.random_fixture(rng)
    got = corpus_metrics(predictions, references, reference_boxes)
    want = oracle_metrics(predictions, references, reference_boxes)
    for name in want:
        assert got[name] == pytest.approx(want[name], abs=1e-6), name
