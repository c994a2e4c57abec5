"""Detection-results exchange format and a seeded stub detector.

Detector outputs travel as one text file per image (stem = image id), one
prediction per line::

    <class_id> <confidence> <cx> <cy> <w> <h>

i.e. a YOLO label line with a confidence column inserted, so any detector's
output converts trivially. The stub detector replays ground truth with
configurable drop/jitter/class-flip noise, which lets the whole pipeline run
end to end without any neural model.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .dataset import (
    BoundingBox,
    ClassRegistry,
    ImageRecord,
    _parse_box,
    _parse_class_id,
    _parse_float,
)
from .errors import ConfidenceOutOfRangeError, MalformedLineError
from .metrics import PredictedBox

__all__ = [
    "DetectionSet",
    "DetectorConfig",
    "parse_detection_file",
    "serialize_detection_file",
    "stub_detect",
    "detections_to_counts",
]


@dataclass(frozen=True)
class DetectionSet:
    """All predictions for one image, tagged with the producing model."""

    image_id: str
    predictions: tuple[PredictedBox, ...] = ()
    source: str = ""

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")


@dataclass(frozen=True)
class DetectorConfig:
    """Noise knobs for the stub detector.

    ``jitter`` is the box perturbation magnitude in normalized units; it
    also scales the confidence noise, so an all-zero config replays ground
    truth exactly with confidence 1.0.
    """

    drop_rate: float = 0.0
    jitter: float = 0.0
    class_flip_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ValueError(f"drop_rate {self.drop_rate} outside [0, 1]")
        if not 0.0 <= self.class_flip_rate <= 1.0:
            raise ValueError(f"class_flip_rate {self.class_flip_rate} outside [0, 1]")
        if self.jitter < 0.0:
            raise ValueError(f"jitter {self.jitter} must be >= 0")


def parse_detection_file(
    image_id: str, text: str, registry: ClassRegistry
) -> DetectionSet:
    """Parse one detection file with the same error discipline as labels."""
    predictions = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        fields = raw.split()
        if not fields:
            continue
        if len(fields) != 6:
            raise MalformedLineError(
                f"expected 6 fields, got {len(fields)}", line=line_no
            )
        class_id = _parse_class_id(fields[0], line_no, registry)
        confidence = _parse_float(fields[1], line_no, "confidence")
        if not 0.0 <= confidence <= 1.0:
            raise ConfidenceOutOfRangeError(
                f"confidence {confidence} outside [0, 1]", line=line_no
            )
        box = _parse_box(fields[2:], line_no)
        predictions.append(PredictedBox(class_id, confidence, box))
    return DetectionSet(image_id, tuple(predictions))


def serialize_detection_file(detections: DetectionSet) -> str:
    """Render predictions back to detection-file text (LF line ends)."""
    lines = [
        f"{p.class_id} {float(p.confidence)!r} {float(p.box.cx)!r} "
        f"{float(p.box.cy)!r} {float(p.box.w)!r} {float(p.box.h)!r}"
        for p in detections.predictions
    ]
    return "".join(line + "\n" for line in lines)


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def stub_detect(
    record: ImageRecord, config: DetectorConfig, num_classes: int
) -> DetectionSet:
    """Replay ground truth boxes through the configured noise model.

    Deterministic for a fixed seed regardless of evaluation order: each
    image derives its own RNG stream from (seed, crc32(image_id)). Per box
    the stream yields, in a fixed order, a drop draw, a confidence draw, two
    class-flip draws, and four box-jitter draws, so a box's fate does not
    depend on how many boxes precede it being dropped.
    """
    rng = np.random.default_rng(
        [config.seed & 0xFFFFFFFF, zlib.crc32(record.image_id.encode("utf-8"))]
    )
    predictions = []
    for gt in record.boxes:
        draws = rng.random(8)
        if draws[0] < config.drop_rate:
            continue
        confidence = _clamp(1.0 - float(draws[1]) * config.jitter, 0.0, 1.0)
        class_id = gt.class_id
        if draws[2] < config.class_flip_rate and num_classes > 1:
            offset = 1 + int(draws[3] * (num_classes - 1))
            class_id = (gt.class_id + min(offset, num_classes - 1)) % num_classes
        j = [(float(d) * 2.0 - 1.0) * config.jitter for d in draws[4:8]]
        box = BoundingBox(
            cx=_clamp(gt.box.cx + j[0], 0.0, 1.0),
            cy=_clamp(gt.box.cy + j[1], 0.0, 1.0),
            w=_clamp(gt.box.w + j[2], 1.0e-6, 1.0),
            h=_clamp(gt.box.h + j[3], 1.0e-6, 1.0),
        )
        predictions.append(PredictedBox(class_id, confidence, box))
    return DetectionSet(record.image_id, tuple(predictions), source="stub")


def detections_to_counts(
    detections: DetectionSet, confidence_threshold: float = 0.5
) -> dict[int, int]:
    """Count predictions at or above the threshold, per class.

    This is the bridge from a platter photo to a meal log: each retained
    detection counts as one serving of its dish class.
    """
    if not 0.0 <= confidence_threshold <= 1.0:
        raise ValueError(f"confidence_threshold {confidence_threshold} outside [0, 1]")
    counts: dict[int, int] = {}
    for pred in detections.predictions:
        if pred.confidence >= confidence_threshold:
            counts[pred.class_id] = counts.get(pred.class_id, 0) + 1
    return counts
