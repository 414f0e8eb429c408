"""Description quality judging: external scorer interface plus local stub."""
from __future__ import annotations

import json
import logging
import os
import urllib.error
import urllib.request
from typing import Protocol, Sequence, Tuple

from .rouge import rouge_l_pair

logger = logging.getLogger(__name__)

JUDGE_URL_ENV = "SURGKIT_JUDGE_URL"
JUDGE_TOKEN_ENV = "SURGKIT_JUDGE_TOKEN"


class JudgeError(RuntimeError):
    """Raised when the judging endpoint cannot score a pair."""


class JudgeClient(Protocol):
    def score(self, prediction: str, reference: str) -> float:
        """Score one pair on a 0..100 scale."""


class StubJudge:
    """Deterministic local judge: the pair's LCS-overlap F1 on a 0..100 scale."""

    def score(self, prediction: str, reference: str) -> float:
        return 100.0 * rouge_l_pair(prediction, reference)


class HttpJudge:
    """POSTs pairs to an external scorer; operating it is out of scope here."""

    def __init__(self, url: str | None = None, token: str | None = None, timeout: float = 10.0):
        self.url = url or os.environ.get(JUDGE_URL_ENV, "")
        self.token = token if token is not None else os.environ.get(JUDGE_TOKEN_ENV, "")
        self.timeout = timeout
        if not self.url:
            raise JudgeError(f"no judge URL configured ({JUDGE_URL_ENV})")

    def score(self, prediction: str, reference: str) -> float:
        payload = json.dumps({"prediction": prediction, "reference": reference}).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=payload, headers={"Content-Type": "application/json"}
        )
        if self.token:
            request.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
            value = float(body["score"])
        except (urllib.error.URLError, OSError, KeyError, TypeError, ValueError) as exc:
            raise JudgeError(f"judge request failed: {exc}") from exc
        if not 0.0 <= value <= 100.0:
            raise JudgeError(f"judge score {value} outside [0, 100]")
        return value


def judge_score(
    predictions: Sequence[str], references: Sequence[str], client: JudgeClient
) -> Tuple[float, float]:
    """(mean score over scored pairs, coverage fraction).

    Pairs the client fails on are left unscored with a warning; coverage
    reports the scored fraction.
    """
    if len(predictions) != len(references):
        raise ValueError("predictions and references must align")
    if not references:
        raise ValueError("no pairs to score")
    scores = []
    for i, (p, r) in enumerate(zip(predictions, references)):
        try:
            scores.append(client.score(p, r))
        except (JudgeError, OSError) as exc:
            logger.warning("judge failed on pair %d: %s", i, exc)
    coverage = len(scores) / len(references)
    mean = sum(scores) / len(scores) if scores else 0.0
    return mean, coverage


def make_judge(name: str) -> JudgeClient:
    """Resolve a --judge flag value to a client."""
    if name == "stub":
        return StubJudge()
    if name == "live":
        return HttpJudge()
    raise JudgeError(f"unknown judge {name!r}; expected stub or live")
