"""Corpus-level BLEU with add-epsilon smoothing and brevity penalty."""
from __future__ import annotations

import math
from collections import Counter
from typing import List, Sequence, Tuple

from .normalize import tokenize

EPSILON = 1e-9


def _ngrams(tokens: List[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(predictions: Sequence[str], references: Sequence[str], max_n: int = 4) -> float:
    """Corpus BLEU-N in [0, 100].

    Modified n-gram precisions are pooled over the corpus; a precision with an
    empty match count is smoothed as (num + eps) / (den + eps) with eps = 1e-9.
    The brevity penalty uses total prediction and reference lengths.
    """
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    if not references:
        raise ValueError("no pairs to score")
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    pred_tokens = [tokenize(p) for p in predictions]
    ref_tokens = [tokenize(r) for r in references]
    pred_len = sum(len(t) for t in pred_tokens)
    ref_len = sum(len(t) for t in ref_tokens)
    if pred_len == 0:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        matched = 0
        total = 0
        for pt, rt in zip(pred_tokens, ref_tokens):
            pred_counts = _ngrams(pt, n)
            ref_counts = _ngrams(rt, n)
            matched += sum(min(c, ref_counts.get(g, 0)) for g, c in pred_counts.items())
            total += max(0, len(pt) - n + 1)
        if matched == 0:
            precision = (matched + EPSILON) / (total + EPSILON)
        else:
            precision = matched / total
        log_sum += math.log(precision) / max_n
    brevity = 1.0 if pred_len > ref_len else math.exp(1.0 - ref_len / pred_len)
    return 100.0 * brevity * math.exp(log_sum)
