"""Recall-oriented overlap metrics: unigram F1 and longest common subsequence F1."""
from __future__ import annotations

from collections import Counter
from typing import List, Sequence

from .normalize import tokenize


def lcs_length(a: List[str], b: List[str]) -> int:
    """Longest common subsequence length over token sequences."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                curr[j] = prev[j - 1] + 1
            else:
                curr[j] = max(prev[j], curr[j - 1])
        prev = curr
    return prev[len(b)]


def _f1(overlap: float, pred_len: int, ref_len: int) -> float:
    if overlap <= 0 or pred_len == 0 or ref_len == 0:
        return 0.0
    precision = overlap / pred_len
    recall = overlap / ref_len
    return 2.0 * precision * recall / (precision + recall)


def rouge1_pair(prediction: str, reference: str) -> float:
    """Clipped unigram-overlap F1 in [0, 1]."""
    pred = tokenize(prediction)
    ref = tokenize(reference)
    pred_counts = Counter(pred)
    ref_counts = Counter(ref)
    overlap = sum(min(c, ref_counts.get(t, 0)) for t, c in pred_counts.items())
    return _f1(overlap, len(pred), len(ref))


def rouge_l_pair(prediction: str, reference: str) -> float:
    """LCS-based F1 (beta = 1) in [0, 1]."""
    pred = tokenize(prediction)
    ref = tokenize(reference)
    return _f1(lcs_length(pred, ref), len(pred), len(ref))


def _corpus(scores: Sequence[float]) -> float:
    if not scores:
        raise ValueError("no pairs to score")
    return 100.0 * sum(scores) / len(scores)


def rouge1(predictions: Sequence[str], references: Sequence[str]) -> float:
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    return _corpus([rouge1_pair(p, r) for p, r in zip(predictions, references)])


def rouge_l(predictions: Sequence[str], references: Sequence[str]) -> float:
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    return _corpus([rouge_l_pair(p, r) for p, r in zip(predictions, references)])
