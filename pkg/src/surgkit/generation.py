"""Conversation generation: five paradigms from canonical frame annotations.

Short-answer and box-answer pairs come straight from templates; region
questions embed the object's grounding text; detailed descriptions are
drafted to cover every annotated attribute and passed through the enricher;
full-sentence QA is elaborated from the short-answer records.
"""
from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .annotations import FrameAnnotation, InstrumentObservation, TissueObservation
from .boxes import position_of
from .enrich import EnrichmentClient, EnrichmentError, StubEnricher
from .grounding import parse_grounding, render_grounding
from .records import ConversationParadigm, InstructionRecord, RecordError, SubTask, Turn
from .templates import QATemplate, TemplateError, pool

logger = logging.getLogger(__name__)

SINGLE_PHRASE_PROMPT = "Answer the question with a single phrase."
GROUNDING_PROMPT = "Answer the question with just a bounding box."

HUMAN_PREFIX = "Human: "
ASSISTANT_PREFIX = "EndoChat: "

_NUMBER_WORDS = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten")


class GenerationError(ValueError):
    """Raised when a paradigm cannot be generated for a frame."""


def count_phrase(n: int, numerals: str = "words") -> str:
    """Render an instrument count; words for 0..10 unless digits requested."""
    if numerals == "digits" or n >= len(_NUMBER_WORDS):
        return str(n)
    return _NUMBER_WORDS[n]


def append_task_prompt(question: str, paradigm: ConversationParadigm) -> str:
    """Suffix the paradigm's fixed prompt sentence; other paradigms unchanged."""
    prompt = None
    if paradigm == ConversationParadigm.SINGLE_PHRASE:
        prompt = SINGLE_PHRASE_PROMPT
    elif paradigm == ConversationParadigm.GROUNDING_QA:
        prompt = GROUNDING_PROMPT
    if prompt is None or question.endswith(prompt):
        return question
    return f"{question} {prompt}"


def strip_task_prompt(question: str) -> str:
    for prompt in (SINGLE_PHRASE_PROMPT, GROUNDING_PROMPT):
        suffix = f" {prompt}"
        if question.endswith(suffix):
            return question[: -len(suffix)]
    return question


def _vowel_article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


def sentence_form(text: str) -> str:
    """Capitalize and terminally punctuate free text so it reads as a sentence."""
    out = " ".join(text.split())
    if not out:
        return out
    out = out[0].upper() + out[1:]
    if out[-1] not in ".!?":
        out += "."
    return out


def instrument_report(inst: InstrumentObservation) -> str:
    """Region answer for an instrument: category, motion, direction, position."""
    clause = f"performing {_vowel_article(inst.motion)} {inst.motion} action"
    if inst.direction is not None:
        clause += f" toward the {inst.direction.value}"
    return (
        f"This region contains the {inst.category}, {clause}, "
        f"at the {position_of(inst.box).value} of the image."
    )


def tissue_report(tissue: TissueObservation) -> str:
    where = f", at the {position_of(tissue.box).value} of the image" if tissue.box else ""
    return f"This region contains the {tissue.name}, the target tissue of the operation{where}."


def _frame_rng(seed: int, frame_id: str, stream: str = "") -> random.Random:
    # string seeding keeps generation order-independent across frames and workers
    return random.Random(f"{seed}:{frame_id}:{stream}")


def _bindings(
    frame: FrameAnnotation,
    paradigm: ConversationParadigm,
    subtask: SubTask,
    numerals: str,
) -> List[Dict[str, str]]:
    """Enumerate slot bindings of a (paradigm, subtask) for one frame."""
    out: List[Dict[str, str]] = []
    boxed_tissues = [t for t in frame.tissues if t.box is not None]
    if paradigm == ConversationParadigm.SINGLE_PHRASE:
        if subtask == SubTask.INSTRUMENT_NUMBER and frame.instruments:
            out.append({"count": count_phrase(len(frame.instruments), numerals)})
        elif subtask == SubTask.INSTRUMENT_CATEGORY:
            for inst in frame.instruments:
                out.append({"category": inst.category, "position": position_of(inst.box).value})
        elif subtask == SubTask.OBJECT_POSITION:
            for inst in frame.instruments:
                out.append({"object": inst.category, "position": position_of(inst.box).value})
            for tissue in boxed_tissues:
                out.append({"object": tissue.name, "position": position_of(tissue.box).value})
        elif subtask == SubTask.INSTRUMENT_MOTION:
            for inst in frame.instruments:
                out.append({"category": inst.category, "motion": inst.motion})
            if frame.phase and not frame.instruments:
                out.append({"phase": frame.phase})
        elif subtask == SubTask.TARGET_TISSUE and frame.tissues:
            out.append({"tissue": frame.tissues[0].name})
        elif subtask == SubTask.MOTION_DIRECTION:
            for inst in frame.instruments:
                if inst.direction is not None:
                    out.append({"category": inst.category, "direction": inst.direction.value})
    elif paradigm == ConversationParadigm.GROUNDING_QA:
        if subtask == SubTask.INSTRUMENT_CATEGORY:
            for inst in frame.instruments:
                out.append(
                    {"category": inst.category, "grounding": render_grounding(inst.category, inst.box)}
                )
        elif subtask == SubTask.TARGET_TISSUE:
            for tissue in boxed_tissues:
                out.append(
                    {"tissue": tissue.name, "grounding": render_grounding(tissue.name, tissue.box)}
                )
    elif paradigm == ConversationParadigm.REGION_BASED_QA:
        if subtask == SubTask.INSTRUMENT_CATEGORY:
            for inst in frame.instruments:
                out.append(
                    {
                        "region": render_grounding(inst.category, inst.box),
                        "report": instrument_report(inst),
                    }
                )
        elif subtask == SubTask.TARGET_TISSUE:
            for tissue in boxed_tissues:
                out.append(
                    {
                        "region": render_grounding(tissue.name, tissue.box),
                        "report": tissue_report(tissue),
                    }
                )
    elif paradigm == ConversationParadigm.VISUAL_QA:
        if subtask == SubTask.INSTRUMENT_MOTION and frame.description_seed:
            out.append({"scene": sentence_form(frame.description_seed)})
    return out


_INSTANTIATE_ORDER: Tuple[Tuple[ConversationParadigm, Tuple[SubTask, ...]], ...] = (
    (
        ConversationParadigm.SINGLE_PHRASE,
        (
            SubTask.INSTRUMENT_NUMBER,
            SubTask.INSTRUMENT_CATEGORY,
            SubTask.OBJECT_POSITION,
            SubTask.INSTRUMENT_MOTION,
            SubTask.TARGET_TISSUE,
            SubTask.MOTION_DIRECTION,
        ),
    ),
    (ConversationParadigm.GROUNDING_QA, (SubTask.INSTRUMENT_CATEGORY, SubTask.TARGET_TISSUE)),
    (ConversationParadigm.VISUAL_QA, (SubTask.INSTRUMENT_MOTION,)),
)


def _make_record(
    frame: FrameAnnotation,
    record_id: str,
    template: QATemplate,
    binding: Dict[str, str],
) -> InstructionRecord:
    question, answer = template.render(binding)
    question = append_task_prompt(question, template.paradigm)
    return InstructionRecord(
        record_id=record_id,
        frame_id=frame.frame_id,
        paradigm=template.paradigm,
        subtask=template.subtask,
        turns=[Turn.make("human", question), Turn.make("assistant", answer)],
        provenance="template",
        template_id=template.template_id,
        source=frame.source,
    )


def instantiate(
    frame: FrameAnnotation,
    templates: Sequence[QATemplate],
    seed: int,
    numerals: str = "words",
) -> List[InstructionRecord]:
    """Template-driven records for one frame: short-answer, box-answer, and
    direct full-sentence QA. One record per applicable (pool, binding); the
    phrasing is drawn seeded-uniform from the pool's applicable templates.
    """
    rng = _frame_rng(seed, frame.frame_id, "instantiate")
    out: List[InstructionRecord] = []
    counter = 0
    for paradigm, subtasks in _INSTANTIATE_ORDER:
        for subtask in subtasks:
            candidates = pool(templates, paradigm, subtask)
            if not candidates:
                continue
            for binding in _bindings(frame, paradigm, subtask, numerals):
                applicable = [t for t in candidates if t.applicable(binding)]
                if not applicable:
                    continue
                template = applicable[rng.randrange(len(applicable))]
                out.append(_make_record(frame, f"{frame.frame_id}#t{counter:03d}", template, binding))
                counter += 1
    return out


def derive_region_based(
    frame: FrameAnnotation,
    seed: int,
    templates: Optional[Sequence[QATemplate]] = None,
) -> List[InstructionRecord]:
    """Region-question records: the question embeds the object's grounding
    text, the answer describes the object without any box."""
    if templates is None:
        from .templates import default_templates

        templates = default_templates()
    rng = _frame_rng(seed, frame.frame_id, "region")
    out: List[InstructionRecord] = []
    counter = 0
    for subtask in (SubTask.INSTRUMENT_CATEGORY, SubTask.TARGET_TISSUE):
        candidates = pool(templates, ConversationParadigm.REGION_BASED_QA, subtask)
        if not candidates:
            continue
        for binding in _bindings(frame, ConversationParadigm.REGION_BASED_QA, subtask, "words"):
            applicable = [t for t in candidates if t.applicable(binding)]
            if not applicable:
                continue
            template = applicable[rng.randrange(len(applicable))]
            out.append(_make_record(frame, f"{frame.frame_id}#r{counter:03d}", template, binding))
            counter += 1
    return out


def _description_coverage(text: str, frame: FrameAnnotation) -> List[str]:
    """Attributes of the frame missing from a description, empty when covered."""
    missing: List[str] = []
    lowered = text.lower()
    for inst in frame.instruments:
        for attr in (inst.category, inst.motion):
            if attr.lower() not in lowered:
                missing.append(attr)
        if inst.direction is not None and inst.direction.value not in lowered:
            missing.append(inst.direction.value)
    for tissue in frame.tissues:
        if tissue.name.lower() not in lowered:
            missing.append(tissue.name)
    if frame.instruments:
        count = count_phrase(len(frame.instruments))
        digits = str(len(frame.instruments))
        if count not in lowered and digits not in lowered:
            missing.append(count)
    rendered = {b.as_tuple() for _, b in parse_grounding(text)}
    for label, box in frame.boxed_objects():
        reparsed = parse_grounding(render_grounding(label, box))
        if reparsed and reparsed[0][1].as_tuple() not in rendered:
            missing.append(f"box of {label}")
    return missing


def draft_description(frame: FrameAnnotation) -> str:
    """Template draft covering count, every instrument attribute, tissues, phase."""
    sentences: List[str] = []
    n = len(frame.instruments)
    if n == 1:
        sentences.append("There is one instrument in the scene.")
    elif n > 1:
        sentences.append(f"There are {count_phrase(n)} instruments in the scene.")
    for inst in frame.instruments:
        clause = f"performing {_vowel_article(inst.motion)} {inst.motion} action"
        if inst.direction is not None:
            clause += f" toward the {inst.direction.value}"
        sentences.append(
            f"The {render_grounding(inst.category, inst.box)} is {clause}, "
            f"at the {position_of(inst.box).value} of the image."
        )
    for tissue in frame.tissues:
        if tissue.box is not None:
            sentences.append(f"The target tissue is the {render_grounding(tissue.name, tissue.box)}.")
        else:
            sentences.append(f"The target tissue is the {tissue.name}.")
    if frame.phase:
        sentences.append(f"The procedure is in the {frame.phase} phase.")
    return " ".join(sentences)


def assemble_detailed_description(
    frame: FrameAnnotation,
    client: EnrichmentClient,
    templates: Optional[Sequence[QATemplate]] = None,
    seed: int = 0,
) -> InstructionRecord:
    """Single-pair detailed description mentioning every annotated attribute
    and grounding every boxed object.

    Raises:
        GenerationError: the frame has no boxed objects, so the paradigm is
            unavailable for it.
    """
    if not frame.has_boxes():
        raise GenerationError(
            f"frame {frame.frame_id!r} has no boxes: detailed description unavailable"
        )
    if templates is None:
        from .templates import default_templates

        templates = default_templates()
    candidates = pool(templates, ConversationParadigm.DETAILED_DESCRIPTION, SubTask.DESCRIPTION)
    if not candidates:
        raise GenerationError("no detailed-description templates available")
    rng = _frame_rng(seed, frame.frame_id, "describe")
    template = candidates[rng.randrange(len(candidates))]
    draft = draft_description(frame)
    record = InstructionRecord(
        record_id=f"{frame.frame_id}#d000",
        frame_id=frame.frame_id,
        paradigm=ConversationParadigm.DETAILED_DESCRIPTION,
        subtask=SubTask.DESCRIPTION,
        turns=[Turn.make("human", template.question_pattern), Turn.make("assistant", draft)],
        provenance="template",
        template_id=template.template_id,
        source=frame.source,
    )
    text, provenance = draft, "template"
    try:
        enriched = client.rewrite(draft, record)
        if _description_coverage(enriched, frame):
            logger.warning(
                "frame %r: enriched description dropped attributes %s, keeping draft",
                frame.frame_id,
                _description_coverage(enriched, frame),
            )
        else:
            text, provenance = enriched, "enriched"
    except EnrichmentError as exc:
        logger.warning("frame %r: enrichment failed (%s), keeping draft", frame.frame_id, exc)
    record.turns[-1] = Turn.make("assistant", text)
    record.provenance = provenance
    return record


def elaborate_visual_qa(
    record: InstructionRecord,
    frame: FrameAnnotation,
    client: EnrichmentClient,
) -> InstructionRecord:
    """Rewrite a short-answer record as full-sentence QA with the prompt
    stripped from the question; the sentence must keep the original phrase."""
    if record.paradigm != ConversationParadigm.SINGLE_PHRASE:
        raise GenerationError(
            f"record {record.record_id!r} has paradigm {record.paradigm.value}, "
            "only single-phrase records elaborate"
        )
    question = strip_task_prompt(record.turns[0].text)
    answer = record.last_answer()
    stub = StubEnricher()
    provenance = "enriched"
    try:
        sentence = client.rewrite(answer, record)
    except EnrichmentError as exc:
        logger.warning("record %r: enrichment failed (%s), using stub", record.record_id, exc)
        sentence, provenance = stub.rewrite(answer, record), "template"
    from .metrics.normalize import normalize_answer

    if normalize_answer(answer) not in normalize_answer(sentence):
        logger.warning(
            "record %r: enriched sentence lost the answer %r, using stub", record.record_id, answer
        )
        sentence, provenance = stub.rewrite(answer, record), "template"
    return InstructionRecord(
        record_id=f"{record.record_id}e",
        frame_id=record.frame_id,
        paradigm=ConversationParadigm.VISUAL_QA,
        subtask=record.subtask,
        turns=[Turn.make("human", question), Turn.make("assistant", sentence)],
        provenance=provenance,
        template_id=record.template_id,
        source=record.source,
    )


def serialize_conversation(record: InstructionRecord) -> str:
    """Exact wire text: 'Human: ' + question, newline, 'EndoChat: ' + answer,
    newline, repeated per pair."""
    parts: List[str] = []
    for question, answer in record.qa_pairs():
        parts.append(f"{HUMAN_PREFIX}{question.text}\n{ASSISTANT_PREFIX}{answer.text}\n")
    return "".join(parts)


_WIRE_RE = re.compile(r"^(Human: .*\nEndoChat: .*\n)+$")


def parse_conversation(text: str) -> List[Tuple[str, str]]:
    """Inverse of serialize_conversation; rejects text outside the line grammar."""
    if not _WIRE_RE.match(text):
        raise RecordError("conversation text does not match the wire grammar")
    pairs: List[Tuple[str, str]] = []
    lines = text.split("\n")[:-1]
    for i in range(0, len(lines), 2):
        pairs.append((lines[i][len(HUMAN_PREFIX):], lines[i + 1][len(ASSISTANT_PREFIX):]))
    return pairs


def derive_subtask_splits(
    records: Iterable[InstructionRecord],
) -> Dict[SubTask, List[InstructionRecord]]:
    """Partition records by sub-task; the description bucket must be exactly
    the detailed-description records."""
    splits: Dict[SubTask, List[InstructionRecord]] = {s: [] for s in SubTask}
    for record in records:
        splits[record.subtask].append(record)
    for record in splits[SubTask.DESCRIPTION]:
        if record.paradigm != ConversationParadigm.DETAILED_DESCRIPTION:
            raise RecordError(
                f"record {record.record_id!r}: Description bucket holds paradigm "
                f"{record.paradigm.value}"
            )
    for subtask, bucket in splits.items():
        if subtask == SubTask.DESCRIPTION:
            continue
        for record in bucket:
            if record.paradigm == ConversationParadigm.DETAILED_DESCRIPTION:
                raise RecordError(
                    f"record {record.record_id!r}: detailed description outside the "
                    "Description bucket"
                )
    return splits


@dataclass
class StatsReport:
    """Corpus composition counts."""

    frames: int = 0
    records: int = 0
    per_paradigm: Dict[str, int] = field(default_factory=dict)
    per_subtask: Dict[str, int] = field(default_factory=dict)
    per_source: Dict[str, int] = field(default_factory=dict)
    box_bearing_records: int = 0

    def as_json(self) -> Dict[str, object]:
        return {
            "frames": self.frames,
            "records": self.records,
            "per_paradigm": dict(sorted(self.per_paradigm.items())),
            "per_subtask": dict(sorted(self.per_subtask.items())),
            "per_source": dict(sorted(self.per_source.items())),
            "box_bearing_records": self.box_bearing_records,
        }


def corpus_stats(records: Sequence[InstructionRecord]) -> StatsReport:
    """Count frames, records per paradigm/subtask/source, box-bearing records."""
    report = StatsReport()
    frames = set()
    for record in records:
        frames.add(record.frame_id)
        report.records += 1
        report.per_paradigm[record.paradigm.value] = (
            report.per_paradigm.get(record.paradigm.value, 0) + 1
        )
        report.per_subtask[record.subtask.value] = (
            report.per_subtask.get(record.subtask.value, 0) + 1
        )
        source = record.source or "unknown"
        report.per_source[source] = report.per_source.get(source, 0) + 1
        if any(turn.boxes for turn in record.turns):
            report.box_bearing_records += 1
    report.frames = len(frames)
    return report


def generate_for_frame(
    frame: FrameAnnotation,
    templates: Sequence[QATemplate],
    seed: int,
    enricher: EnrichmentClient,
    caps: Optional[Dict[str, int]] = None,
    numerals: str = "words",
) -> List[InstructionRecord]:
    """All paradigms for one frame, capped per paradigm when requested.

    Frames without boxes (phase/sentence-only sources) are restricted to the
    short-answer and full-sentence paradigms.
    """
    base = instantiate(frame, templates, seed, numerals)
    records = list(base)
    if frame.has_boxes():
        records.extend(derive_region_based(frame, seed, templates))
        records.append(assemble_detailed_description(frame, enricher, templates, seed))
        for record in base:
            if record.paradigm == ConversationParadigm.SINGLE_PHRASE:
                records.append(elaborate_visual_qa(record, frame, enricher))
    if caps:
        kept: List[InstructionRecord] = []
        used: Dict[str, int] = {}
        for record in records:
            key = record.paradigm.value
            cap = caps.get(key)
            if cap is not None:
                if cap < 0:
                    raise GenerationError(f"cap for {key} must be >= 0")
                if used.get(key, 0) >= cap:
                    continue
            used[key] = used.get(key, 0) + 1
            kept.append(record)
        records = kept
    return records


def generate_corpus(
    frames: Iterable[FrameAnnotation],
    templates: Sequence[QATemplate],
    seed: int,
    enricher: Optional[EnrichmentClient] = None,
    caps: Optional[Dict[str, int]] = None,
    numerals: str = "words",
) -> List[InstructionRecord]:
    """Deterministic corpus over all frames (per-frame seeded streams)."""
    enricher = enricher or StubEnricher()
    out: List[InstructionRecord] = []
    for frame in frames:
        out.extend(generate_for_frame(frame, templates, seed, enricher, caps, numerals))
    return out
