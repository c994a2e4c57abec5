"""YOLO-format dataset handling: parsing, serialization, statistics, splits.

A dataset is a class registry (ordered names, implicit 0-based ids) plus a
list of image records, each holding the normalized bounding boxes read from
one ``<image_id>.txt`` label file. One box per line::

    <class_id> <cx> <cy> <w> <h>

with coordinates expressed as fractions of the image size. All values are
immutable after construction, so datasets can be shared freely across
threads.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import (
    BoxOutOfRangeError,
    DuplicateClassError,
    EmptyRegistryError,
    MalformedLineError,
    UnknownClassError,
)

__all__ = [
    "ClassRegistry",
    "BoundingBox",
    "GroundTruthBox",
    "ImageRecord",
    "Dataset",
    "DatasetStats",
    "parse_class_list",
    "parse_yolo_label_file",
    "serialize_yolo_label",
    "compute_stats",
    "stats_from_counts",
    "split_dataset",
]


@dataclass(frozen=True)
class ClassRegistry:
    """Ordered class names; the id of a class is its position in the list."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise EmptyRegistryError("class registry is empty")
        seen = set()
        for name in self.names:
            if name in seen:
                raise DuplicateClassError(f"duplicate class name {name!r}")
            seen.add(name)

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def name_of(self, class_id: int) -> str:
        return self.names[class_id]

    def id_of(self, name: str) -> int:
        return self.names.index(name)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized center/size form."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise BoxOutOfRangeError(
                f"box center ({self.cx}, {self.cy}) outside [0, 1]"
            )
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise BoxOutOfRangeError(
                f"box size ({self.w}, {self.h}) outside (0, 1]"
            )

    def corners(self) -> tuple[float, float, float, float]:
        """(x1, y1, x2, y2) clamped to the unit square."""
        x1 = min(max(self.cx - self.w / 2.0, 0.0), 1.0)
        y1 = min(max(self.cy - self.h / 2.0, 0.0), 1.0)
        x2 = min(max(self.cx + self.w / 2.0, 0.0), 1.0)
        y2 = min(max(self.cy + self.h / 2.0, 0.0), 1.0)
        return x1, y1, x2, y2

    def area(self) -> float:
        x1, y1, x2, y2 = self.corners()
        return (x2 - x1) * (y2 - y1)


@dataclass(frozen=True)
class GroundTruthBox:
    class_id: int
    box: BoundingBox

    def __post_init__(self):
        if self.class_id < 0:
            raise UnknownClassError(f"negative class id {self.class_id}")


@dataclass(frozen=True)
class ImageRecord:
    """One labeled image; ``image_id`` is the stem of its label file."""

    image_id: str
    boxes: tuple[GroundTruthBox, ...] = ()


@dataclass(frozen=True)
class Dataset:
    registry: ClassRegistry
    images: tuple[ImageRecord, ...] = ()

    def __post_init__(self):
        seen = set()
        for record in self.images:
            if record.image_id in seen:
                raise ValueError(f"duplicate image id {record.image_id!r}")
            seen.add(record.image_id)
            for gt in record.boxes:
                if gt.class_id >= len(self.registry):
                    raise UnknownClassError(
                        f"class id {gt.class_id} outside registry of "
                        f"{len(self.registry)} classes"
                    )

    def __len__(self) -> int:
        return len(self.images)

    def boxes_by_image(self) -> dict[str, tuple[GroundTruthBox, ...]]:
        return {record.image_id: record.boxes for record in self.images}


@dataclass(frozen=True)
class DatasetStats:
    """Per-class occurrence counts plus their spread across classes.

    ``per_class_image_count[i]`` counts images containing at least one box of
    class ``i`` (an image with k distinct classes contributes to k rows, so
    the column sum can exceed ``total_images``). Means and standard
    deviations are taken over the per-class count vectors; the sample
    (ddof=1) standard deviation is used, degenerating to 0.0 for a
    single-class registry.
    """

    per_class_image_count: tuple[int, ...]
    per_class_annotation_count: tuple[int, ...]
    image_mean: float
    image_std: float
    annotation_mean: float
    annotation_std: float
    total_images: int
    total_annotations: int


def parse_class_list(text: str) -> ClassRegistry:
    """Parse a newline-separated class-name file into a registry.

    Line k (0-based, after trimming and skipping blank lines) gets id k.
    """
    names = [line.strip() for line in text.splitlines()]
    names = [name for name in names if name]
    return ClassRegistry(tuple(names))


def _parse_float(token: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedLineError(f"bad {what} {token!r}", line=line_no) from None
    if not math.isfinite(value):
        raise MalformedLineError(f"non-finite {what} {token!r}", line=line_no)
    return value


def _parse_class_id(token: str, line_no: int, registry: ClassRegistry) -> int:
    try:
        class_id = int(token)
    except ValueError:
        raise MalformedLineError(
            f"class id {token!r} is not an integer", line=line_no
        ) from None
    if not 0 <= class_id < len(registry):
        raise UnknownClassError(
            f"class id {class_id} outside registry of {len(registry)} classes",
            line=line_no,
        )
    return class_id


def _parse_box(fields: Sequence[str], line_no: int) -> BoundingBox:
    cx, cy, w, h = (
        _parse_float(token, line_no, what)
        for token, what in zip(fields, ("cx", "cy", "w", "h"))
    )
    try:
        return BoundingBox(cx, cy, w, h)
    except BoxOutOfRangeError as exc:
        raise BoxOutOfRangeError(str(exc), line=line_no) from None


def parse_yolo_label_file(
    image_id: str, text: str, registry: ClassRegistry
) -> ImageRecord:
    """Parse one YOLO label file. Blank lines are skipped; box order is kept.

    Raises a :class:`FormatError` naming the 1-based line number on any
    malformed line (wrong field count, non-integer id, id outside the
    registry, coordinate outside the box invariants).
    """
    boxes = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        fields = raw.split()
        if not fields:
            continue
        if len(fields) != 5:
            raise MalformedLineError(
                f"expected 5 fields, got {len(fields)}", line=line_no
            )
        class_id = _parse_class_id(fields[0], line_no, registry)
        boxes.append(GroundTruthBox(class_id, _parse_box(fields[1:], line_no)))
    return ImageRecord(image_id, tuple(boxes))


def _format_float(value: float) -> str:
    # repr() of a builtin float emits the shortest decimal that round-trips
    # to the same value, which makes parse(serialize(r)) a fixed point. The
    # cast also keeps numpy scalars from leaking their own repr.
    return repr(float(value))


def serialize_yolo_label(record: ImageRecord) -> str:
    """Render an image record back to YOLO label-file text (LF line ends)."""
    lines = [
        f"{gt.class_id} {_format_float(gt.box.cx)} {_format_float(gt.box.cy)} "
        f"{_format_float(gt.box.w)} {_format_float(gt.box.h)}"
        for gt in record.boxes
    ]
    return "".join(line + "\n" for line in lines)


def _mean_std(counts: Sequence[int]) -> tuple[float, float]:
    n = len(counts)
    mean = sum(counts) / n
    if n < 2:
        return mean, 0.0
    var = sum((c - mean) ** 2 for c in counts) / (n - 1)
    return mean, math.sqrt(var)


def stats_from_counts(
    image_counts: Sequence[int], annotation_counts: Sequence[int], total_images: int
) -> DatasetStats:
    """Build stats from pre-tallied per-class count vectors."""
    if len(image_counts) != len(annotation_counts):
        raise ValueError("count vectors differ in length")
    image_mean, image_std = _mean_std(image_counts)
    ann_mean, ann_std = _mean_std(annotation_counts)
    return DatasetStats(
        per_class_image_count=tuple(image_counts),
        per_class_annotation_count=tuple(annotation_counts),
        image_mean=image_mean,
        image_std=image_std,
        annotation_mean=ann_mean,
        annotation_std=ann_std,
        total_images=total_images,
        total_annotations=sum(annotation_counts),
    )


def compute_stats(dataset: Dataset) -> DatasetStats:
    """Tally per-class image/annotation counts and their spread.

    An image counts once per class it contains, however many boxes of that
    class it holds.
    """
    n = len(dataset.registry)
    image_counts = [0] * n
    ann_counts = [0] * n
    for record in dataset.images:
        for class_id in {gt.class_id for gt in record.boxes}:
            image_counts[class_id] += 1
        for gt in record.boxes:
            ann_counts[gt.class_id] += 1
    return stats_from_counts(image_counts, ann_counts, total_images=len(dataset))


def split_dataset(
    dataset: Dataset, train_fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Split images into (train, test) by a seeded uniform shuffle.

    The train side gets ``round(train_fraction * n)`` images (half-up);
    the partition is disjoint, exhaustive, and deterministic for a fixed
    seed. Images keep their dataset order within each side.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(dataset.images)
    indices = list(range(n))
    random.Random(seed).shuffle(indices)
    k = int(math.floor(train_fraction * n + 0.5))
    train_idx = sorted(indices[:k])
    test_idx = sorted(indices[k:])
    train = Dataset(dataset.registry, tuple(dataset.images[i] for i in train_idx))
    test = Dataset(dataset.registry, tuple(dataset.images[i] for i in test_idx))
    return train, test
