"""Language-model enrichment: the live HTTP client interface and its stub.

The pipeline only ever needs ``rewrite(draft, record) -> text``. The stub is
a pure function over (subtask, answer) so generation stays reproducible.
"""
from __future__ import annotations

import json
import logging
import os
import urllib.error
import urllib.request
from typing import Protocol

from .records import InstructionRecord, SubTask, record_to_json

logger = logging.getLogger(__name__)

ENRICHER_URL_ENV = "SURGKIT_ENRICHER_URL"
ENRICHER_TOKEN_ENV = "SURGKIT_ENRICHER_TOKEN"


class EnrichmentError(RuntimeError):
    """Raised when the live enrichment endpoint cannot produce text."""


class EnrichmentClient(Protocol):
    def rewrite(self, draft: str, record: InstructionRecord) -> str:
        """Return enriched text for the draft belonging to the record."""


def _vowel_article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


class StubEnricher:
    """Deterministic sentence templates keyed by (subtask, answer)."""

    def rewrite(self, draft: str, record: InstructionRecord) -> str:
        subtask = record.subtask
        if subtask == SubTask.DESCRIPTION:
            return draft
        answer = record.last_answer()
        if subtask == SubTask.INSTRUMENT_NUMBER:
            if answer in ("one", "1"):
                return f"There is {answer} instrument visible in the surgical scene."
            return f"There are {answer} instruments visible in the surgical scene."
        if subtask == SubTask.INSTRUMENT_CATEGORY:
            return f"The instrument in view is {_vowel_article(answer)} {answer}."
        if subtask == SubTask.OBJECT_POSITION:
            return f"The object is located at the {answer} of the image."
        if subtask == SubTask.INSTRUMENT_MOTION:
            return f"The instrument is currently {answer}."
        if subtask == SubTask.TARGET_TISSUE:
            return f"The target tissue in this scene is the {answer}."
        if subtask == SubTask.MOTION_DIRECTION:
            return f"The instrument is moving in the {answer} direction."
        raise EnrichmentError(f"no stub template for subtask {subtask.value!r}")


class HttpEnricher:
    """POSTs drafts to an external rewriting endpoint.

    Operating the endpoint is outside this repo; the client only defines the
    exchange: JSON {"instruction", "record"} in, {"text"} out, bearer token
    from SURGKIT_ENRICHER_TOKEN.
    """

    def __init__(self, url: str | None = None, token: str | None = None, timeout: float = 10.0):
        self.url = url or os.environ.get(ENRICHER_URL_ENV, "")
        self.token = token if token is not None else os.environ.get(ENRICHER_TOKEN_ENV, "")
        self.timeout = timeout
        if not self.url:
            raise EnrichmentError(f"no enrichment URL configured ({ENRICHER_URL_ENV})")

    def rewrite(self, draft: str, record: InstructionRecord) -> str:
        payload = json.dumps(
            {"instruction": draft, "record": record_to_json(record)}
        ).encode("utf-8")
        request = urllib.request.Request(
            self.url, data=payload, headers={"Content-Type": "application/json"}
        )
        if self.token:
            request.add_header("Authorization", f"Bearer {self.token}")
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                body = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, json.JSONDecodeError, OSError) as exc:
            raise EnrichmentError(f"enrichment request failed: {exc}") from exc
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise EnrichmentError("enrichment response carried no text")
        return text.strip()


def make_enricher(name: str) -> EnrichmentClient:
    """Resolve an --enricher flag value to a client."""
    if name == "stub":
        return StubEnricher()
    if name == "live":
        return HttpEnricher()
    raise EnrichmentError(f"unknown enricher {name!r}; expected stub or live")
