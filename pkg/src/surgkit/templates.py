"""QA template pools loaded from a tab-separated text file."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Tuple

from .records import ConversationParadigm, SubTask

_SLOT_RE = re.compile(r"\{(\w+)\}")


class TemplateError(ValueError):
    """Raised for malformed template files or unresolvable slots."""


@dataclass(frozen=True)
class QATemplate:
    """One question/answer pattern pair for a (paradigm, subtask)."""

    template_id: str
    paradigm: ConversationParadigm
    subtask: SubTask
    question_pattern: str
    answer_pattern: str
    slots: Tuple[str, ...] = field(default=())

    @staticmethod
    def build(
        template_id: str,
        paradigm: ConversationParadigm,
        subtask: SubTask,
        question_pattern: str,
        answer_pattern: str,
    ) -> "QATemplate":
        slots = tuple(
            sorted(set(_SLOT_RE.findall(question_pattern)) | set(_SLOT_RE.findall(answer_pattern)))
        )
        return QATemplate(template_id, paradigm, subtask, question_pattern, answer_pattern, slots)

    def applicable(self, binding: Dict[str, str]) -> bool:
        """A template applies when every slot resolves from the binding."""
        return all(slot in binding for slot in self.slots)

    def render(self, binding: Dict[str, str]) -> Tuple[str, str]:
        """Fill both patterns; raises TemplateError naming the missing slot."""
        for slot in self.slots:
            if slot not in binding:
                raise TemplateError(
                    f"template {self.template_id!r}: slot {{{slot}}} does not resolve"
                )

        def fill(pattern: str) -> str:
            return _SLOT_RE.sub(lambda m: binding[m.group(1)], pattern)

        return fill(self.question_pattern), fill(self.answer_pattern)


_SHORT = {
    ConversationParadigm.SINGLE_PHRASE: "sp",
    ConversationParadigm.DETAILED_DESCRIPTION: "dd",
    ConversationParadigm.VISUAL_QA: "vq",
    ConversationParadigm.REGION_BASED_QA: "rb",
    ConversationParadigm.GROUNDING_QA: "gq",
}


def parse_templates(lines: Iterable[str]) -> List[QATemplate]:
    """Parse template lines: paradigm TAB subtask TAB question TAB answer."""
    out: List[QATemplate] = []
    counters: Dict[Tuple[ConversationParadigm, SubTask], int] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise TemplateError(f"line {lineno}: expected 4 tab-separated fields, got {len(parts)}")
        p_raw, s_raw, question, answer = (p.strip() for p in parts)
        try:
            paradigm = ConversationParadigm(p_raw)
        except ValueError as exc:
            raise TemplateError(f"line {lineno}: unknown paradigm {p_raw!r}") from exc
        try:
            subtask = SubTask(s_raw)
        except ValueError as exc:
            raise TemplateError(f"line {lineno}: unknown subtask {s_raw!r}") from exc
        if not question or not answer:
            raise TemplateError(f"line {lineno}: empty question or answer pattern")
        key = (paradigm, subtask)
        counters[key] = counters.get(key, 0) + 1
        template_id = f"{_SHORT[paradigm]}-{subtask.value.lower()}-{counters[key]:02d}"
        out.append(QATemplate.build(template_id, paradigm, subtask, question, answer))
    return out


def load_templates(path: str | Path) -> List[QATemplate]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_templates(text.splitlines())


def default_templates() -> List[QATemplate]:
    """The template pools shipped with the package."""
    text = resources.files("surgkit").joinpath("templates/default.tsv").read_text(encoding="utf-8")
    return parse_templates(text.splitlines())


def pool(
    templates: Iterable[QATemplate], paradigm: ConversationParadigm, subtask: SubTask
) -> List[QATemplate]:
    return [t for t in templates if t.paradigm == paradigm and t.subtask == subtask]
