"""Structural contracts for generated records, checked independently.

This module deliberately reimplements its own box scanning and sentence
heuristics instead of importing the generation or grounding code, so a bug
there cannot hide here. Validation works over plain record objects and
returns human-readable violations; an empty list means the contract holds.
"""
from __future__ import annotations

import re
from typing import Dict, List, Sequence, Tuple

from .records import ConversationParadigm, InstructionRecord

_NUM = r"(?:[01](?:\.\d{1,4})?|\.\d{1,4})"
_BOX_RE = re.compile(r"\[\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\]")
# One grounding group and nothing else: label word-run, a space, the box.
_PURE_GROUNDING_RE = re.compile(
    r"^[\w][\w\s\-']*\s\[\s*" + _NUM + r"\s*,\s*" + _NUM + r"\s*,\s*" + _NUM + r"\s*,\s*" + _NUM + r"\s*\]$"
)
_SENTENCE_RE = re.compile(r"^[A-Z0-9].*[.!?]$")
WIRE_RE = re.compile(r"^(Human: .*\nEndoChat: .*\n)+$")

SINGLE_PHRASE_MAX_WORDS = 4


def _parseable_boxes(text: str) -> List[Tuple[float, float, float, float]]:
    """Bracket groups that scan as valid boxes: in [0,1] with x1<x2, y1<y2."""
    boxes = []
    for match in _BOX_RE.finditer(text):
        x1, y1, x2, y2 = (float(g) for g in match.groups())
        if 0.0 <= x1 < x2 <= 1.0 and 0.0 <= y1 < y2 <= 1.0:
            boxes.append((x1, y1, x2, y2))
    return boxes


def _is_full_sentence(text: str) -> bool:
    """Starts capitalized (or with a digit), ends with terminal punctuation,
    and carries at least three words."""
    stripped = text.strip()
    return bool(_SENTENCE_RE.match(stripped)) and len(stripped.split()) >= 3


def _check_turn_structure(record: InstructionRecord) -> List[str]:
    problems = []
    if len(record.turns) < 2 or len(record.turns) % 2 != 0:
        problems.append(f"expected an even number of turns >= 2, got {len(record.turns)}")
    for i, turn in enumerate(record.turns):
        expected = "human" if i % 2 == 0 else "assistant"
        if turn.role != expected:
            problems.append(f"turn {i} has role {turn.role!r}, expected {expected!r}")
        if "\n" in turn.text:
            problems.append(f"turn {i} text spans multiple lines")
        if not turn.text.strip():
            problems.append(f"turn {i} text is empty")
    return problems


def _check_single_phrase(question: str, answer: str) -> List[str]:
    problems = []
    if len(answer.split()) > SINGLE_PHRASE_MAX_WORDS:
        problems.append(f"single-phrase answer exceeds {SINGLE_PHRASE_MAX_WORDS} words: {answer!r}")
    if _parseable_boxes(answer):
        problems.append(f"single-phrase answer contains a box: {answer!r}")
    return problems


def _check_grounding(question: str, answer: str) -> List[str]:
    problems = []
    boxes = _parseable_boxes(answer)
    if len(boxes) != 1:
        problems.append(f"grounding answer must contain exactly one box, found {len(boxes)}: {answer!r}")
    if not _PURE_GROUNDING_RE.match(answer.strip()):
        problems.append(f"grounding answer carries content beyond the grounding form: {answer!r}")
    return problems


def _check_region_based(question: str, answer: str) -> List[str]:
    problems = []
    if not _parseable_boxes(question):
        problems.append(f"region question must contain at least one box: {question!r}")
    if _parseable_boxes(answer):
        problems.append(f"region answer must be box-free: {answer!r}")
    return problems


def _check_sentence_answer(question: str, answer: str) -> List[str]:
    if not _is_full_sentence(answer):
        return [f"answer is not a full sentence: {answer!r}"]
    return []


_PARADIGM_CHECKS = {
    ConversationParadigm.SINGLE_PHRASE: _check_single_phrase,
    ConversationParadigm.GROUNDING_QA: _check_grounding,
    ConversationParadigm.REGION_BASED_QA: _check_region_based,
    ConversationParadigm.VISUAL_QA: _check_sentence_answer,
    ConversationParadigm.DETAILED_DESCRIPTION: _check_sentence_answer,
}


def check_record(record: InstructionRecord) -> List[str]:
    """All contract violations for one record; empty means it passes."""
    problems = _check_turn_structure(record)
    check = _PARADIGM_CHECKS[record.paradigm]
    for i in range(0, len(record.turns) - 1, 2):
        question = record.turns[i].text
        answer = record.turns[i + 1].text
        problems.extend(check(question, answer))
    return problems


def validate_records(records: Sequence[InstructionRecord]) -> Dict[str, List[str]]:
    """Map of record_id to violations, holding only the failing records."""
    failures = {}
    for record in records:
        problems = check_record(record)
        if problems:
            failures[record.record_id] = problems
    return failures


def validate_wire(text: str) -> bool:
    """Whether a serialized conversation matches the line grammar
    ``(Human: ...\\nEndoChat: ...\\n)+`` exactly."""
    return bool(WIRE_RE.match(text))
