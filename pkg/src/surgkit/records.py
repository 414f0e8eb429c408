"""Instruction records: conversation paradigms, sub-tasks, turns, and JSON I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

from .boxes import BoundingBox
from .grounding import parse_grounding


class ConversationParadigm(str, Enum):
    SINGLE_PHRASE = "single_phrase"
    DETAILED_DESCRIPTION = "detailed_description"
    VISUAL_QA = "visual_qa"
    REGION_BASED_QA = "region_based_qa"
    GROUNDING_QA = "grounding_qa"


class SubTask(str, Enum):
    INSTRUMENT_NUMBER = "IN"
    INSTRUMENT_CATEGORY = "IC"
    OBJECT_POSITION = "OP"
    INSTRUMENT_MOTION = "IM"
    TARGET_TISSUE = "TI"
    MOTION_DIRECTION = "MD"
    DESCRIPTION = "Description"


class RecordError(ValueError):
    """Raised when a record violates a structural invariant."""


@dataclass(frozen=True)
class Turn:
    """One message: role, text, and the boxes grounded inline in the text."""

    role: str
    text: str
    boxes: Tuple[Tuple[str, BoundingBox], ...] = ()

    def __post_init__(self) -> None:
        if self.role not in ("human", "assistant"):
            raise RecordError(f"unknown role {self.role!r}")
        if "\n" in self.text:
            raise RecordError("turn text must be single-line")

    @staticmethod
    def make(role: str, text: str) -> "Turn":
        """Build a turn, deriving its box list from the text itself."""
        return Turn(role=role, text=text, boxes=tuple(parse_grounding(text)))


@dataclass
class InstructionRecord:
    """One training conversation tied to a frame."""

    record_id: str
    frame_id: str
    paradigm: ConversationParadigm
    subtask: SubTask
    turns: List[Turn]
    provenance: str = "template"
    template_id: Optional[str] = None
    source: Optional[str] = None

    def __post_init__(self) -> None:
        if self.provenance not in ("template", "enriched"):
            raise RecordError(f"provenance {self.provenance!r} must be template or enriched")
        if not self.turns:
            raise RecordError(f"record {self.record_id!r} has no turns")
        for i, turn in enumerate(self.turns):
            expected = "human" if i % 2 == 0 else "assistant"
            if turn.role != expected:
                raise RecordError(
                    f"record {self.record_id!r}: turn {i} has role {turn.role!r}, "
                    f"expected {expected!r} (human-first alternation)"
                )
        if len(self.turns) % 2 != 0:
            raise RecordError(f"record {self.record_id!r} must end on an assistant turn")

    def qa_pairs(self) -> List[Tuple[Turn, Turn]]:
        return [(self.turns[i], self.turns[i + 1]) for i in range(0, len(self.turns), 2)]

    def last_answer(self) -> str:
        return self.turns[-1].text


def record_to_json(record: InstructionRecord) -> Dict[str, Any]:
    return {
        "record_id": record.record_id,
        "frame_id": record.frame_id,
        "paradigm": record.paradigm.value,
        "subtask": record.subtask.value,
        "turns": [
            {
                "role": t.role,
                "text": t.text,
                "boxes": [[label, list(box.as_tuple())] for label, box in t.boxes],
            }
            for t in record.turns
        ],
        "provenance": record.provenance,
        "template_id": record.template_id,
        "source": record.source,
    }


def record_from_json(obj: Dict[str, Any]) -> InstructionRecord:
    return InstructionRecord(
        record_id=obj["record_id"],
        frame_id=obj["frame_id"],
        paradigm=ConversationParadigm(obj["paradigm"]),
        subtask=SubTask(obj["subtask"]),
        turns=[
            Turn(
                role=t["role"],
                text=t["text"],
                boxes=tuple((label, BoundingBox(*coords)) for label, coords in t.get("boxes", [])),
            )
            for t in obj["turns"]
        ],
        provenance=obj.get("provenance", "template"),
        template_id=obj.get("template_id"),
        source=obj.get("source"),
    )


def dump_records(records: Iterable[InstructionRecord]) -> str:
    """Serialize records as line-delimited JSON, deterministically ordered keys."""
    return "".join(json.dumps(record_to_json(r), sort_keys=True) + "\n" for r in records)


def load_records(lines: Iterable[str]) -> Iterator[InstructionRecord]:
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            yield record_from_json(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise RecordError(f"line {lineno}: {exc}") from exc
