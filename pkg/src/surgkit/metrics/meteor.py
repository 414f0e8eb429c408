"""Unigram-alignment metric with exact and stem matching stages.

Per pair: align hypothesis unigrams to reference unigrams, exact matches
first, then stem matches over the leftovers. Within each stage a hypothesis
token pairs with the leftmost unmatched reference token (the documented
tie-break). With m matches over hp hypothesis and rf reference tokens:

    P = m / hp,  R = m / rf,  F_mean = 10PR / (R + 9P)
    penalty = 0.5 * (chunks / m)^3
    pair score = F_mean * (1 - penalty)

The corpus score is the pair mean, x100.
"""
from __future__ import annotations

from typing import List, Sequence, Tuple

from .normalize import tokenize
from .stem import porter_stem


def _align(pred: List[str], ref: List[str]) -> List[Tuple[int, int]]:
    """(pred_index, ref_index) pairs from the two matching stages."""
    matched_pred = [False] * len(pred)
    matched_ref = [False] * len(ref)
    pairs: List[Tuple[int, int]] = []
    for keyed_pred, keyed_ref in (
        (pred, ref),
        ([porter_stem(t) for t in pred], [porter_stem(t) for t in ref]),
    ):
        for i, key in enumerate(keyed_pred):
            if matched_pred[i]:
                continue
            for j, ref_key in enumerate(keyed_ref):
                if not matched_ref[j] and ref_key == key:
                    matched_pred[i] = True
                    matched_ref[j] = True
                    pairs.append((i, j))
                    break
    return sorted(pairs)


def _chunks(pairs: List[Tuple[int, int]]) -> int:
    """Maximal runs contiguous and monotone in both sentences."""
    if not pairs:
        return 0
    by_pred = sorted(pairs)
    count = 1
    for (i0, j0), (i1, j1) in zip(by_pred, by_pred[1:]):
        if i1 != i0 + 1 or j1 != j0 + 1:
            count += 1
    return count


def meteor_pair(prediction: str, reference: str) -> float:
    """Single-pair score in [0, 1]."""
    pred = tokenize(prediction)
    ref = tokenize(reference)
    if not pred or not ref:
        return 0.0
    pairs = _align(pred, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(pred)
    recall = m / len(ref)
    f_mean = 10.0 * precision * recall / (recall + 9.0 * precision)
    penalty = 0.5 * (_chunks(pairs) / m) ** 3
    return f_mean * (1.0 - penalty)


def meteor(predictions: Sequence[str], references: Sequence[str]) -> float:
    """Corpus score in [0, 100]: mean pair score."""
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    if not references:
        raise ValueError("no pairs to score")
    return 100.0 * sum(meteor_pair(p, r) for p, r in zip(predictions, references)) / len(references)
