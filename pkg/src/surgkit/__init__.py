"""Surgical multimodal instruction-data toolkit.

Builds conversation corpora from frame annotations, runs a sampling-based
human cleaning pass over HTTP, scores transcripts with the full metric
battery, and simulates the token-mixing and contrastive-decoding kernels.
"""

from .annotations import (
    FrameAnnotation,
    InstrumentObservation,
    SchemaError,
    TissueObservation,
    ValidationError,
    ingest_lines,
)
from .boxes import BoundingBox, BoxError, DirectionLabel, PositionLabel, iou, position_of
from .grounding import parse_grounding, render_grounding
from .records import ConversationParadigm, InstructionRecord, RecordError, SubTask, Turn
from .templates import QATemplate, TemplateError, default_templates, load_templates

__all__ = [
    "BoundingBox",
    "BoxError",
    "ConversationParadigm",
    "DirectionLabel",
    "FrameAnnotation",
    "InstructionRecord",
    "InstrumentObservation",
    "PositionLabel",
    "QATemplate",
    "RecordError",
    "SchemaError",
    "SubTask",
    "TemplateError",
    "TissueObservation",
    "Turn",
    "ValidationError",
    "default_templates",
    "ingest_lines",
    "iou",
    "load_templates",
    "parse_grounding",
    "position_of",
    "render_grounding",
]

__version__ = "0.1.0"
