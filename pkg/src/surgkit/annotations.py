"""Canonical frame annotations and source-schema adapters.

Ingestion accepts line-delimited JSON in one of four schemas. The three
dataset-specific adapters produce the same canonical ``FrameAnnotation``
the rest of the pipeline consumes; boxes are normalized on the way in.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

from .boxes import BoundingBox, BoxError, DirectionLabel, normalize_box

logger = logging.getLogger(__name__)

# Motions that never require a direction under the default rule.
STATIONARY_MOTIONS: FrozenSet[str] = frozenset({"idle", "hold", "stay idle"})

ENDOVIS_IMAGE_SIZE = (1280, 1024)
COPESD_IMAGE_SIZE = (1306, 1009)
CHOLEC80_IMAGE_SIZE = (854, 480)

_DIRECTION_ALIASES = {d.value: d for d in DirectionLabel}
_DIRECTION_ALIASES.update({d.value.replace("-", " "): d for d in DirectionLabel})


class SchemaError(ValueError):
    """Raised when a source record does not satisfy its schema."""


class ValidationError(ValueError):
    """Raised when a canonical annotation violates an invariant."""


def requires_direction(motion: str, moving_motions: Optional[FrozenSet[str]] = None) -> bool:
    """Whether a motion label implies movement and therefore needs a direction.

    ``moving_motions`` overrides the default rule (everything outside
    ``STATIONARY_MOTIONS`` moves). Pass an empty set for sources that never
    annotate directions.
    """
    m = motion.strip().lower()
    if moving_motions is not None:
        return m in moving_motions
    return m not in STATIONARY_MOTIONS


@dataclass(frozen=True)
class InstrumentObservation:
    """One instrument visible in a frame."""

    category: str
    box: BoundingBox
    motion: str
    direction: Optional[DirectionLabel] = None

    def __post_init__(self) -> None:
        if not self.category.strip():
            raise ValidationError("instrument category must be non-empty")
        if not self.motion.strip():
            raise ValidationError("instrument motion must be non-empty")


@dataclass(frozen=True)
class TissueObservation:
    """One tissue of interest, box optional (not every source localizes tissue)."""

    name: str
    box: Optional[BoundingBox] = None

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValidationError("tissue name must be non-empty")


@dataclass
class FrameAnnotation:
    """Canonical per-frame annotation every generator consumes."""

    frame_id: str
    image_path: str
    image_size: Tuple[int, int]
    instruments: List[InstrumentObservation] = field(default_factory=list)
    tissues: List[TissueObservation] = field(default_factory=list)
    phase: Optional[str] = None
    description_seed: Optional[str] = None
    source: Optional[str] = None

    def validate(self, moving_motions: Optional[FrozenSet[str]] = None) -> "FrameAnnotation":
        """Check all invariants, returning self for chaining.

        Raises:
            ValidationError: empty frame_id, non-positive image size, or a
                moving instrument without a direction.
        """
        if not self.frame_id.strip():
            raise ValidationError("frame_id must be non-empty")
        w, h = self.image_size
        if w <= 0 or h <= 0:
            raise ValidationError(f"frame {self.frame_id!r}: image size {w}x{h} not positive")
        for inst in self.instruments:
            if inst.direction is None and requires_direction(inst.motion, moving_motions):
                raise ValidationError(
                    f"frame {self.frame_id!r}: motion {inst.motion!r} implies movement "
                    "but no direction is annotated"
                )
        return self

    def boxed_objects(self) -> List[Tuple[str, BoundingBox]]:
        """All (label, box) pairs in annotation order, instruments first."""
        out: List[Tuple[str, BoundingBox]] = [(i.category, i.box) for i in self.instruments]
        out.extend((t.name, t.box) for t in self.tissues if t.box is not None)
        return out

    def has_boxes(self) -> bool:
        return bool(self.boxed_objects())


def _require(record: Dict[str, Any], key: str, schema: str) -> Any:
    if key not in record or record[key] is None:
        raise SchemaError(f"{schema} record missing required field {key!r}")
    return record[key]


def _parse_direction(raw: Any, frame_id: str) -> Optional[DirectionLabel]:
    if raw is None:
        return None
    key = str(raw).strip().lower()
    if key not in _DIRECTION_ALIASES:
        raise SchemaError(f"frame {frame_id!r}: unknown direction label {raw!r}")
    return _DIRECTION_ALIASES[key]


def _image_size(record: Dict[str, Any], default: Tuple[int, int]) -> Tuple[int, int]:
    raw = record.get("image_size")
    if raw is None:
        return default
    if not isinstance(raw, (list, tuple)) or len(raw) != 2:
        raise SchemaError(f"image_size {raw!r} must be [width, height]")
    return (int(raw[0]), int(raw[1]))


def adapt_endovis(record: Dict[str, Any]) -> FrameAnnotation:
    """Adapt a robotic-surgery record: frame action, target tissue, instruments.

    This source annotates no motion directions, so direction checks are
    disabled for it (empty moving set).
    """
    frame_id = str(_require(record, "frame_id", "endovis"))
    width, height = _image_size(record, ENDOVIS_IMAGE_SIZE)
    action = str(_require(record, "action", "endovis"))
    instruments = []
    for raw in _require(record, "instruments", "endovis"):
        name = str(_require(raw, "name", "endovis.instrument"))
        bbox = _require(raw, "bbox", "endovis.instrument")
        instruments.append(
            InstrumentObservation(
                category=name,
                box=normalize_box(bbox, width, height, frame_id=frame_id),
                motion=action,
            )
        )
    tissues = []
    raw_tissue = record.get("tissue")
    if raw_tissue is not None:
        t_box = None
        if raw_tissue.get("bbox") is not None:
            t_box = normalize_box(raw_tissue["bbox"], width, height, frame_id=frame_id)
        tissues.append(TissueObservation(name=str(_require(raw_tissue, "name", "endovis.tissue")), box=t_box))
    return FrameAnnotation(
        frame_id=frame_id,
        image_path=str(record.get("image_path", "")),
        image_size=(width, height),
        instruments=instruments,
        tissues=tissues,
        phase=record.get("phase"),
        source="endovis",
    ).validate(moving_motions=frozenset())


def adapt_copesd(record: Dict[str, Any]) -> FrameAnnotation:
    """Adapt a submucosal-dissection record: instrument boxes plus motion and direction."""
    frame_id = str(_require(record, "frame_id", "copesd"))
    width, height = _image_size(record, COPESD_IMAGE_SIZE)
    instruments = []
    for raw in _require(record, "instruments", "copesd"):
        name = str(_require(raw, "name", "copesd.instrument"))
        bbox = _require(raw, "bbox", "copesd.instrument")
        motion = str(_require(raw, "motion", "copesd.instrument"))
        direction = _parse_direction(raw.get("direction"), frame_id)
        if direction is None and requires_direction(motion):
            raise SchemaError(
                f"frame {frame_id!r}: moving motion {motion!r} lacks a direction"
            )
        instruments.append(
            InstrumentObservation(
                category=name,
                box=normalize_box(bbox, width, height, frame_id=frame_id),
                motion=motion,
                direction=direction,
            )
        )
    tissues = []
    for raw in record.get("tissues", []):
        t_box = None
        if raw.get("bbox") is not None:
            t_box = normalize_box(raw["bbox"], width, height, frame_id=frame_id)
        tissues.append(TissueObservation(name=str(_require(raw, "name", "copesd.tissue")), box=t_box))
    return FrameAnnotation(
        frame_id=frame_id,
        image_path=str(record.get("image_path", "")),
        image_size=(width, height),
        instruments=instruments,
        tissues=tissues,
        phase=record.get("phase"),
        description_seed=record.get("description"),
        source="copesd",
    ).validate()


def adapt_cholec80(record: Dict[str, Any]) -> FrameAnnotation:
    """Adapt a cholecystectomy record: phase and sentence annotations, no boxes.

    A bounding box on the record is a schema mismatch; it is ignored with a
    warning because this source never localizes objects.
    """
    frame_id = str(_require(record, "frame_id", "cholec80"))
    width, height = _image_size(record, CHOLEC80_IMAGE_SIZE)
    for key in ("box", "bbox", "boxes", "instruments", "tissues"):
        if record.get(key):
            logger.warning("frame %r: cholec80 schema has no %s field, ignoring", frame_id, key)
    phase = str(_require(record, "phase", "cholec80"))
    sentence = record.get("sentence")
    return FrameAnnotation(
        frame_id=frame_id,
        image_path=str(record.get("image_path", "")),
        image_size=(width, height),
        phase=phase,
        description_seed=str(sentence) if sentence is not None else None,
        source="cholec80",
    ).validate()


def adapt_canonical(record: Dict[str, Any]) -> FrameAnnotation:
    """Read a record already in the canonical schema (normalized boxes).

    This is the format `frame_to_json` writes: ingest emits it and generation
    consumes it, so the two sides of the pipeline share one representation.
    Sources with pixel boxes go through their own adapters.
    """
    frame_id = str(_require(record, "frame_id", "canonical"))
    width, height = _image_size(record, (0, 0))
    if width <= 0 or height <= 0:
        raise SchemaError(f"canonical record {frame_id!r} missing positive image_size")
    try:
        return frame_from_json(record).validate()
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"canonical record {frame_id!r}: missing field {exc}") from exc


ADAPTERS = {
    "endovis": adapt_endovis,
    "copesd": adapt_copesd,
    "cholec80": adapt_cholec80,
    "canonical": adapt_canonical,
}


def frame_to_json(frame: FrameAnnotation) -> Dict[str, Any]:
    """Serialize a validated frame with normalized float boxes."""
    return {
        "frame_id": frame.frame_id,
        "image_path": frame.image_path,
        "image_size": list(frame.image_size),
        "instruments": [
            {
                "category": i.category,
                "box": list(i.box.as_tuple()),
                "motion": i.motion,
                "direction": i.direction.value if i.direction else None,
            }
            for i in frame.instruments
        ],
        "tissues": [
            {"name": t.name, "box": list(t.box.as_tuple()) if t.box else None}
            for t in frame.tissues
        ],
        "phase": frame.phase,
        "description_seed": frame.description_seed,
        "source": frame.source,
    }


def frame_from_json(obj: Dict[str, Any]) -> FrameAnnotation:
    """Inverse of frame_to_json (boxes already normalized)."""
    return FrameAnnotation(
        frame_id=obj["frame_id"],
        image_path=obj.get("image_path", ""),
        image_size=tuple(obj["image_size"]),
        instruments=[
            InstrumentObservation(
                category=i["category"],
                box=BoundingBox(*i["box"]),
                motion=i["motion"],
                direction=DirectionLabel(i["direction"]) if i.get("direction") else None,
            )
            for i in obj.get("instruments", [])
        ],
        tissues=[
            TissueObservation(name=t["name"], box=BoundingBox(*t["box"]) if t.get("box") else None)
            for t in obj.get("tissues", [])
        ],
        phase=obj.get("phase"),
        description_seed=obj.get("description_seed"),
        source=obj.get("source"),
    )


def ingest_lines(lines: Iterable[str], schema: str) -> Iterator[FrameAnnotation]:
    """Adapt line-delimited JSON records of the given schema.

    Raises:
        SchemaError: unknown schema, malformed JSON, or a record that fails
            its adapter; the message names the offending line.
    """
    if schema not in ADAPTERS:
        raise SchemaError(f"unknown schema {schema!r}; expected one of {sorted(ADAPTERS)}")
    adapter = ADAPTERS[schema]
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"line {lineno}: invalid JSON ({exc})") from exc
        try:
            yield adapter(record)
        except (SchemaError, ValidationError, BoxError) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from exc
