"""Box-answer metrics: mean IoU and hit rate at the 0.5 overlap threshold."""
from __future__ import annotations

import logging
from typing import List, Optional, Sequence

from ..boxes import BoundingBox, iou
from ..grounding import parse_grounding

logger = logging.getLogger(__name__)


def prediction_box(text: str) -> Optional[BoundingBox]:
    """First parseable box in a prediction, None when there is none."""
    parsed = parse_grounding(text)
    return parsed[0][1] if parsed else None


def _pair_ious(
    predictions: Sequence[str], reference_boxes: Sequence[Optional[BoundingBox]]
) -> List[float]:
    if len(predictions) != len(reference_boxes):
        raise ValueError("predictions and reference boxes must align")
    values: List[float] = []
    for i, (text, ref_box) in enumerate(zip(predictions, reference_boxes)):
        if ref_box is None:
            logger.warning("pair %d has no reference box, skipping", i)
            continue
        pred_box = prediction_box(text)
        values.append(iou(pred_box, ref_box) if pred_box is not None else 0.0)
    return values


def mean_iou(
    predictions: Sequence[str], reference_boxes: Sequence[Optional[BoundingBox]]
) -> float:
    """Mean IoU x100; an unparseable prediction contributes zero."""
    values = _pair_ious(predictions, reference_boxes)
    if not values:
        raise ValueError("no scoreable pairs (every reference lacks a box)")
    return 100.0 * sum(values) / len(values)


def ap_at_50(
    predictions: Sequence[str], reference_boxes: Sequence[Optional[BoundingBox]]
) -> float:
    """Percent of pairs whose IoU reaches 0.5 (inclusive threshold)."""
    values = _pair_ious(predictions, reference_boxes)
    if not values:
        raise ValueError("no scoreable pairs (every reference lacks a box)")
    return 100.0 * sum(v >= 0.5 for v in values) / len(values)
