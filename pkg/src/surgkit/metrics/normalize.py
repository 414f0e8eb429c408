"""Answer normalization shared by the phrase-level metrics."""
from __future__ import annotations

import re
from typing import List

_NUMBER_WORDS = {
    "zero": "0",
    "one": "1",
    "two": "2",
    "three": "3",
    "four": "4",
    "five": "5",
    "six": "6",
    "seven": "7",
    "eight": "8",
    "nine": "9",
    "ten": "10",
}

_TERMINAL_PUNCT = ".,;:!?"
_TOKEN_RE = re.compile(r"[a-z0-9]+")


def normalize_answer(text: str) -> str:
    """Canonical phrase form: lowercased, whitespace collapsed, terminal
    punctuation stripped, number words zero..ten mapped to digits."""
    out = " ".join(text.lower().split())
    out = out.rstrip(_TERMINAL_PUNCT)
    out = " ".join(out.split())
    tokens = [(_NUMBER_WORDS.get(t, t)) for t in out.split(" ") if t]
    return " ".join(tokens)


def tokenize(text: str) -> List[str]:
    """Lowercased alphanumeric token runs; the convention for all text metrics."""
    return _TOKEN_RE.findall(text.lower())
