"""Consensus captioning score: TF-IDF n-gram cosine with length penalty.

The clipped variant: candidate counts are clipped to the reference count in
the numerator, and a Gaussian penalty on the length difference (sigma = 6)
scales each n-gram order's similarity. Scores live in [0, 10].
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from typing import Dict, List, Sequence, Tuple

from .normalize import tokenize

SIGMA = 6.0
MAX_N = 4


def _all_ngrams(tokens: List[str], max_n: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


def cider_d(
    predictions: Sequence[str],
    references: Sequence[str],
    max_n: int = MAX_N,
    sigma: float = SIGMA,
) -> float:
    """Corpus score: mean over pairs of the penalized per-order similarity, x10.

    Document frequencies come from the reference corpus. With a single
    reference all IDF weights are log(1) = 0 and the score degenerates to 0;
    two or more distinct references make the weighting meaningful.
    """
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    if not references:
        raise ValueError("no pairs to score")
    pred_tokens = [tokenize(p) for p in predictions]
    ref_tokens = [tokenize(r) for r in references]
    doc_freq: Dict[Tuple[str, ...], int] = defaultdict(int)
    for rt in ref_tokens:
        for gram in set(_all_ngrams(rt, max_n)):
            doc_freq[gram] += 1
    log_corpus = math.log(max(len(references), 1))

    def vectorize(tokens: List[str]):
        vec: List[Dict[Tuple[str, ...], float]] = [dict() for _ in range(max_n)]
        norm = [0.0] * max_n
        for gram, count in _all_ngrams(tokens, max_n).items():
            idf = log_corpus - math.log(max(1.0, doc_freq[gram]))
            order = len(gram) - 1
            weight = count * idf
            vec[order][gram] = weight
            norm[order] += weight * weight
        return vec, [math.sqrt(v) for v in norm], len(tokens)

    total = 0.0
    for pt, rt in zip(pred_tokens, ref_tokens):
        vec_p, norm_p, len_p = vectorize(pt)
        vec_r, norm_r, len_r = vectorize(rt)
        delta = float(len_p - len_r)
        penalty = math.exp(-(delta * delta) / (2.0 * sigma * sigma))
        pair = 0.0
        for order in range(max_n):
            sim = 0.0
            for gram, weight in vec_p[order].items():
                sim += min(weight, vec_r[order].get(gram, 0.0)) * vec_r[order].get(gram, 0.0)
            if norm_p[order] != 0.0 and norm_r[order] != 0.0:
                sim /= norm_p[order] * norm_r[order]
            pair += sim * penalty
        total += pair / max_n
    return 10.0 * total / len(references)
