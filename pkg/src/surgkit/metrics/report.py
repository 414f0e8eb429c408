"""Transcript evaluation: paradigm-routed metric computation and reporting."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..boxes import BoundingBox
from ..grounding import parse_grounding
from ..records import ConversationParadigm, SubTask, record_from_json
from .bleu import bleu
from .cider import cider_d
from .classification import accuracy, macro_f1
from .detection import ap_at_50, mean_iou
from .judge import JudgeClient, StubJudge, judge_score
from .meteor import meteor
from .rouge import rouge1, rouge_l

logger = logging.getLogger(__name__)

INAPPLICABLE = "inapplicable"

ROUTING: Dict[ConversationParadigm, Tuple[str, ...]] = {
    ConversationParadigm.SINGLE_PHRASE: ("Acc", "F"),
    ConversationParadigm.GROUNDING_QA: ("AP@50", "mIoU"),
    ConversationParadigm.VISUAL_QA: ("BLEU-3", "BLEU-4", "CIDEr", "METEOR", "ROUGE-1", "ROUGE-L"),
    ConversationParadigm.REGION_BASED_QA: (
        "BLEU-3",
        "BLEU-4",
        "CIDEr",
        "METEOR",
        "ROUGE-1",
        "ROUGE-L",
    ),
    ConversationParadigm.DETAILED_DESCRIPTION: ("judge",),
}

ALL_METRICS: Tuple[str, ...] = (
    "Acc",
    "F",
    "AP@50",
    "mIoU",
    "BLEU-3",
    "BLEU-4",
    "CIDEr",
    "METEOR",
    "ROUGE-1",
    "ROUGE-L",
    "judge",
)


class EvalError(ValueError):
    """Raised for misaligned or unusable evaluation inputs."""


@dataclass(frozen=True)
class EvalPair:
    """One scored prediction/reference pair."""

    record_id: str
    paradigm: ConversationParadigm
    subtask: SubTask
    reference: str
    prediction: str
    reference_box: Optional[BoundingBox] = None


@dataclass
class MetricReport:
    """Metric values per (paradigm, subtask) bucket.

    Values are floats on their reporting scales ([0, 100], CIDEr [0, 10]) or
    the string "inapplicable" for requested metrics a paradigm does not route.
    """

    buckets: Dict[str, Dict[str, Union[float, str]]] = field(default_factory=dict)
    pair_counts: Dict[str, int] = field(default_factory=dict)
    unmatched_reference_ids: List[str] = field(default_factory=list)
    unmatched_prediction_ids: List[str] = field(default_factory=list)

    def as_json(self) -> Dict[str, object]:
        return {
            "buckets": {k: dict(sorted(v.items())) for k, v in sorted(self.buckets.items())},
            "pair_counts": dict(sorted(self.pair_counts.items())),
            "unmatched_reference_ids": list(self.unmatched_reference_ids),
            "unmatched_prediction_ids": list(self.unmatched_prediction_ids),
        }

    def table(self) -> str:
        lines = []
        width = max([len(k) for k in self.buckets] + [8])
        for bucket in sorted(self.buckets):
            values = self.buckets[bucket]
            rendered = "  ".join(
                f"{name}={value:.2f}" if isinstance(value, float) else f"{name}={value}"
                for name, value in sorted(values.items())
            )
            lines.append(f"{bucket:<{width}}  n={self.pair_counts.get(bucket, 0):<4d}  {rendered}")
        return "\n".join(lines)


def _compute(
    name: str, pairs: Sequence[EvalPair], judge: JudgeClient
) -> Union[float, Tuple[float, float]]:
    preds = [p.prediction for p in pairs]
    refs = [p.reference for p in pairs]
    if name == "Acc":
        return accuracy(preds, refs)
    if name == "F":
        return macro_f1(preds, refs)
    if name == "mIoU":
        return mean_iou(preds, [p.reference_box for p in pairs])
    if name == "AP@50":
        return ap_at_50(preds, [p.reference_box for p in pairs])
    if name == "BLEU-3":
        return bleu(preds, refs, max_n=3)
    if name == "BLEU-4":
        return bleu(preds, refs, max_n=4)
    if name == "CIDEr":
        return cider_d(preds, refs)
    if name == "METEOR":
        return meteor(preds, refs)
    if name == "ROUGE-1":
        return rouge1(preds, refs)
    if name == "ROUGE-L":
        return rouge_l(preds, refs)
    if name == "judge":
        return judge_score(preds, refs, judge)
    raise EvalError(f"unknown metric {name!r}")


def normalize_metric_names(requested: Iterable[str]) -> List[str]:
    """Map user-supplied metric names onto canonical ones."""
    canon = {m.lower(): m for m in ALL_METRICS}
    canon.update({"f1": "F", "bleu": "BLEU-4", "rouge": "ROUGE-L", "ap50": "AP@50"})
    out = []
    for name in requested:
        key = name.strip().lower()
        if key not in canon:
            raise EvalError(f"unknown metric {name!r}; expected one of {sorted(set(canon.values()))}")
        out.append(canon[key])
    return out


def evaluate(
    pairs: Sequence[EvalPair],
    metrics: Optional[Sequence[str]] = None,
    judge: Optional[JudgeClient] = None,
) -> MetricReport:
    """Score pairs bucketed by (paradigm, subtask) with paradigm routing.

    ``metrics`` restricts computation to a subset; a requested metric not
    routed for a bucket's paradigm is reported as "inapplicable". The report
    is independent of pair order.
    """
    if not pairs:
        raise EvalError("no pairs to evaluate")
    judge = judge or StubJudge()
    requested = normalize_metric_names(metrics) if metrics else None
    report = MetricReport()
    grouped: Dict[Tuple[str, str], List[EvalPair]] = {}
    for pair in pairs:
        grouped.setdefault((pair.paradigm.value, pair.subtask.value), []).append(pair)
    for (paradigm_value, subtask_value), bucket_pairs in sorted(grouped.items()):
        bucket_pairs = sorted(bucket_pairs, key=lambda p: p.record_id)
        routed = ROUTING[ConversationParadigm(paradigm_value)]
        names = requested if requested is not None else list(routed)
        key = f"{paradigm_value}/{subtask_value}"
        report.pair_counts[key] = len(bucket_pairs)
        bucket: Dict[str, Union[float, str]] = {}
        for name in names:
            if name not in routed:
                bucket[name] = INAPPLICABLE
                continue
            value = _compute(name, bucket_pairs, judge)
            if name == "judge":
                mean, coverage = value
                bucket["judge"] = mean
                bucket["judge_coverage"] = 100.0 * coverage
            else:
                bucket[name] = value
        report.buckets[key] = bucket
    return report


def _reference_from_line(obj: Dict[str, object]) -> Tuple[str, EvalPair]:
    """Build the reference half of a pair from one reference-file line.

    Accepts either full instruction records (reference text = last assistant
    turn) or flat {record_id, text, paradigm, subtask, box?} objects.
    """
    if "turns" in obj:
        record = record_from_json(obj)  # type: ignore[arg-type]
        text = record.last_answer()
        box = None
        for _, candidate in record.turns[-1].boxes:
            box = candidate
            break
        return record.record_id, EvalPair(
            record_id=record.record_id,
            paradigm=record.paradigm,
            subtask=record.subtask,
            reference=text,
            prediction="",
            reference_box=box,
        )
    record_id = str(obj["record_id"])
    text = str(obj["text"])
    paradigm = ConversationParadigm(str(obj["paradigm"]))
    subtask = SubTask(str(obj["subtask"]))
    box = None
    if obj.get("box") is not None:
        box = BoundingBox(*obj["box"])  # type: ignore[misc]
    else:
        parsed = parse_grounding(text)
        if parsed:
            box = parsed[0][1]
    return record_id, EvalPair(
        record_id=record_id,
        paradigm=paradigm,
        subtask=subtask,
        reference=text,
        prediction="",
        reference_box=box,
    )


def align_files(
    reference_lines: Iterable[str],
    transcript_lines: Iterable[str],
    max_unmatched_fraction: float = 0.10,
) -> Tuple[List[EvalPair], List[str], List[str]]:
    """Join references and transcript on record_id.

    Returns (pairs, unmatched_reference_ids, unmatched_prediction_ids).

    Raises:
        EvalError: malformed lines, or more than ``max_unmatched_fraction`` of
            reference ids missing predictions.
    """
    references: Dict[str, EvalPair] = {}
    order: List[str] = []
    for lineno, line in enumerate(reference_lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record_id, pair = _reference_from_line(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise EvalError(f"references line {lineno}: {exc}") from exc
        if record_id in references:
            raise EvalError(f"references line {lineno}: duplicate record_id {record_id!r}")
        references[record_id] = pair
        order.append(record_id)
    predictions: Dict[str, str] = {}
    for lineno, line in enumerate(transcript_lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            predictions[str(obj["record_id"])] = str(obj["text"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise EvalError(f"transcript line {lineno}: {exc}") from exc
    if not references:
        raise EvalError("references file holds no records")
    pairs: List[EvalPair] = []
    unmatched_refs = []
    for record_id in order:
        if record_id in predictions:
            ref = references[record_id]
            pairs.append(
                EvalPair(
                    record_id=ref.record_id,
                    paradigm=ref.paradigm,
                    subtask=ref.subtask,
                    reference=ref.reference,
                    prediction=predictions[record_id],
                    reference_box=ref.reference_box,
                )
            )
        else:
            unmatched_refs.append(record_id)
    unmatched_preds = sorted(set(predictions) - set(references))
    fraction = len(unmatched_refs) / len(references)
    if fraction > max_unmatched_fraction:
        raise EvalError(
            f"{len(unmatched_refs)} of {len(references)} reference ids lack predictions "
            f"({100 * fraction:.1f}% > {100 * max_unmatched_fraction:.0f}%): "
            f"first missing {unmatched_refs[:5]}"
        )
    if unmatched_refs:
        logger.warning("unmatched reference ids: %s", unmatched_refs)
    if unmatched_preds:
        logger.warning("transcript ids absent from references: %s", unmatched_preds)
    return pairs, unmatched_refs, unmatched_preds
