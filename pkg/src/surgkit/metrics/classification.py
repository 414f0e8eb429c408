"""Phrase-answer metrics: exact-match accuracy and macro-averaged F1."""
from __future__ import annotations

from typing import Dict, Sequence, Tuple

from .normalize import normalize_answer


def accuracy(predictions: Sequence[str], references: Sequence[str]) -> float:
    """Percent of predictions exactly matching their reference after normalization."""
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    if not references:
        raise ValueError("no pairs to score")
    hits = sum(
        normalize_answer(p) == normalize_answer(r) for p, r in zip(predictions, references)
    )
    return 100.0 * hits / len(references)


def macro_f1(predictions: Sequence[str], references: Sequence[str]) -> float:
    """Macro-averaged per-class F1.

    Classes are the normalized labels observed in the references; a predicted
    label never seen in the references forms its own class, contributing zero
    recall (and zero F1) to the average.
    """
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    if not references:
        raise ValueError("no pairs to score")
    preds = [normalize_answer(p) for p in predictions]
    refs = [normalize_answer(r) for r in references]
    classes = sorted(set(refs) | set(preds))
    tp: Dict[str, int] = {c: 0 for c in classes}
    fp: Dict[str, int] = {c: 0 for c in classes}
    fn: Dict[str, int] = {c: 0 for c in classes}
    for p, r in zip(preds, refs):
        if p == r:
            tp[p] += 1
        else:
            fp[p] += 1
            fn[r] += 1
    total = 0.0
    for c in classes:
        precision = tp[c] / (tp[c] + fp[c]) if tp[c] + fp[c] else 0.0
        recall = tp[c] / (tp[c] + fn[c]) if tp[c] + fn[c] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        total += f1
    return 100.0 * total / len(classes)
