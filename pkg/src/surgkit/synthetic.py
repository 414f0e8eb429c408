"""Seeded synthetic frame corpus for demos and end-to-end tests.

Frames carry plausible instrument, tissue, phase, and scene-gist content so
every conversation paradigm can be exercised, plus small rendered images for
the review server. The same (count, seed) always reproduces the same frames
and the same image bytes.
"""
from __future__ import annotations

import random
from pathlib import Path
from typing import List, Optional, Tuple

from PIL import Image, ImageDraw

from .annotations import (
    FrameAnnotation,
    InstrumentObservation,
    TissueObservation,
    frame_to_json,
)
from .boxes import BoundingBox, DirectionLabel, position_of

INSTRUMENT_CATEGORIES = (
    "prograsp forceps",
    "large needle driver",
    "monopolar curved scissors",
    "bipolar forceps",
    "ultrasound probe",
    "suction instrument",
    "clip applier",
    "grasping retractor",
)
MOVING_MOTIONS = (
    "grasping",
    "cutting",
    "retraction",
    "suturing",
    "cauterization",
    "suction",
    "looping",
)
STILL_MOTIONS = ("idle", "hold", "stay idle")
TISSUES = (
    "kidney",
    "gallbladder",
    "liver",
    "peritoneum",
    "cystic duct",
    "omentum",
)
PHASES = (
    "preparation",
    "calot triangle dissection",
    "clipping and cutting",
    "gallbladder dissection",
    "gallbladder packaging",
)

DEFAULT_IMAGE_SIZE = (320, 256)

_PALETTE = (
    (196, 92, 66),
    (88, 134, 180),
    (110, 168, 96),
    (182, 148, 72),
    (150, 96, 168),
)


def _random_box(rng: random.Random) -> BoundingBox:
    x1 = rng.uniform(0.02, 0.55)
    y1 = rng.uniform(0.02, 0.55)
    return BoundingBox(
        x1=x1,
        y1=y1,
        x2=x1 + rng.uniform(0.15, min(0.42, 0.98 - x1)),
        y2=y1 + rng.uniform(0.15, min(0.42, 0.98 - y1)),
    )


def _scene_gist(rng: random.Random, instruments: List[InstrumentObservation],
                tissues: List[TissueObservation], phase: Optional[str]) -> str:
    if instruments:
        lead = instruments[0]
        gist = f"the {lead.category} is {lead.motion} at the {position_of(lead.box).value} of the frame"
        if tissues:
            gist += f" near the {tissues[0].name}"
    elif tissues:
        gist = f"the {tissues[0].name} occupies the field of view"
    else:
        gist = "the endoscope surveys the operative field"
    if phase and rng.random() < 0.5:
        gist += f" during {phase}"
    return gist


def make_frame(index: int, seed: int, image_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE,
               image_dir: str = "images") -> FrameAnnotation:
    """One deterministic frame; index and seed fully determine the content."""
    rng = random.Random(f"synthetic:{seed}:{index}")
    frame_id = f"syn-{index:04d}"

    # Most frames carry instruments; every tenth is a phase-only view.
    n_instruments = 0 if index % 10 == 9 else rng.randint(1, 3)
    instruments = []
    for _ in range(n_instruments):
        motion = rng.choice(MOVING_MOTIONS + STILL_MOTIONS)
        direction = (
            rng.choice(list(DirectionLabel)) if motion in MOVING_MOTIONS else None
        )
        instruments.append(
            InstrumentObservation(
                category=rng.choice(INSTRUMENT_CATEGORIES),
                box=_random_box(rng),
                motion=motion,
                direction=direction,
            )
        )

    tissues = []
    if rng.random() < 0.8:
        tissues.append(
            TissueObservation(
                name=rng.choice(TISSUES),
                box=_random_box(rng) if rng.random() < 0.75 else None,
            )
        )

    phase = rng.choice(PHASES) if rng.random() < 0.6 else None
    return FrameAnnotation(
        frame_id=frame_id,
        image_path=f"{image_dir}/{frame_id}.png",
        image_size=image_size,
        instruments=instruments,
        tissues=tissues,
        phase=phase,
        description_seed=_scene_gist(rng, instruments, tissues, phase),
        source="synthetic",
    ).validate()


def make_frames(count: int = 50, seed: int = 0,
                image_size: Tuple[int, int] = DEFAULT_IMAGE_SIZE) -> List[FrameAnnotation]:
    if count < 1:
        raise ValueError("count must be >= 1")
    return [make_frame(i, seed) for i in range(count)]


def render_frame_image(frame: FrameAnnotation) -> Image.Image:
    """A flat backdrop with one labeled rectangle per boxed object."""
    width, height = frame.image_size
    rng = random.Random(f"image:{frame.frame_id}")
    base = tuple(rng.randint(30, 70) for _ in range(3))
    image = Image.new("RGB", (width, height), base)
    draw = ImageDraw.Draw(image)
    for i, (label, box) in enumerate(frame.boxed_objects()):
        color = _PALETTE[i % len(_PALETTE)]
        px = (box.x1 * width, box.y1 * height, box.x2 * width, box.y2 * height)
        draw.rectangle(px, outline=color, width=3)
        draw.text((px[0] + 4, px[1] + 4), label, fill=color)
    return image


def write_corpus(out_dir: Path, frames: List[FrameAnnotation],
                 annotations_name: str = "frames.jsonl") -> Path:
    """Write annotations as canonical JSONL plus one PNG per frame.

    Returns the annotations path. Rendering is deterministic, so rewriting
    the same frames reproduces identical bytes.
    """
    import json

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for frame in frames:
        image_path = out_dir / frame.image_path
        image_path.parent.mkdir(parents=True, exist_ok=True)
        render_frame_image(frame).save(image_path, format="PNG")
    annotations_path = out_dir / annotations_name
    with open(annotations_path, "w", encoding="utf-8") as handle:
        for frame in frames:
            handle.write(json.dumps(frame_to_json(frame), sort_keys=True) + "\n")
    return annotations_path
