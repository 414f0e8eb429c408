"""Inline grounding text: object label followed by a normalized box.

The canonical rendered form is ``kidney [0.10, 0.20, 0.30, 0.40]`` with two
decimal places and comma-space separators. Parsing is deliberately looser so
model output survives: variable whitespace, up to four decimal places, and
labels recovered as the word run immediately before the bracket.
"""
from __future__ import annotations

import logging
import re
from typing import List, Tuple

from .boxes import BoundingBox, BoxError

logger = logging.getLogger(__name__)

_NUM = r"(?:[01](?:\.\d{1,4})?|\.\d{1,4})"
_GROUP_RE = re.compile(
    r"\[\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*,\s*(" + _NUM + r")\s*\]"
)
# label = trailing run of word characters (spaces/hyphens allowed inside)
_LABEL_RE = re.compile(r"([\w][\w\s\-']*?)\s*$")


def render_grounding(label: str, box: BoundingBox) -> str:
    """Render the canonical grounding text for one object."""
    coords = ", ".join(f"{v:.2f}" for v in box.as_tuple())
    prefix = f"{label} " if label else ""
    return f"{prefix}[{coords}]"


def parse_grounding(text: str) -> List[Tuple[str, BoundingBox]]:
    """Extract every (label, box) pair from free text.

    Bracket groups that violate box invariants (corner order, range) are
    skipped with a warning rather than failing the parse.
    """
    out: List[Tuple[str, BoundingBox]] = []
    last_end = 0
    for match in _GROUP_RE.finditer(text):
        coords = tuple(float(g) for g in match.groups())
        span = text[last_end : match.start()]
        last_end = match.end()
        label_match = _LABEL_RE.search(span)
        label = label_match.group(1) if label_match else ""
        try:
            box = BoundingBox(*coords)
        except BoxError as exc:
            logger.warning("skipping invalid box %s: %s", list(coords), exc)
            continue
        out.append((label, box))
    return out
