"""A tour of YOLO-format dataset handling.

Builds a tiny labeled dataset on disk, parses it back, prints per-class
statistics, and splits it 90:10, the same plumbing the CLI wraps.

Run: python demos/01_dataset_tour.py
"""

import tempfile
from pathlib import Path

import numpy as np

from platterkit import (
    compute_stats,
    parse_class_list,
    parse_yolo_label_file,
    serialize_yolo_label,
    split_dataset,
)
from platterkit.dataset import Dataset

rng = np.random.default_rng(0)

# ── Write a small dataset: a class list plus one label file per image ──────
workdir = Path(tempfile.mkdtemp(prefix="platter_demo_"))
labels_dir = workdir / "labels"
labels_dir.mkdir()

class_names = ["samosa", "jalebi", "dal", "idli"]
(workdir / "classes.txt").write_text("".join(n + "\n" for n in class_names))

for i in range(20):
    lines = []
    for _ in range(rng.integers(0, 5)):
        class_id = rng.integers(len(class_names))
        cx, cy = rng.uniform(0.2, 0.8, size=2)
        w, h = rng.uniform(0.05, 0.3, size=2)
        lines.append(f"{class_id} {cx:.4f} {cy:.4f} {w:.4f} {h:.4f}\n")
    (labels_dir / f"platter{i:03d}.txt").write_text("".join(lines))

print(f"dataset written to {workdir}")

# ── Parse everything back into immutable records ───────────────────────────
registry = parse_class_list((workdir / "classes.txt").read_text())
records = [
    parse_yolo_label_file(p.stem, p.read_text(), registry)
    for p in sorted(labels_dir.glob("*.txt"))
]
dataset = Dataset(registry, tuple(records))
print(f"parsed {len(dataset)} images, "
      f"{sum(len(r.boxes) for r in dataset.images)} boxes")

# Serialization is a perfect inverse of parsing: the emitted text parses to
# bit-identical boxes.
sample = dataset.images[0]
assert parse_yolo_label_file(sample.image_id, serialize_yolo_label(sample), registry).boxes == sample.boxes
print("round-trip: parse(serialize(record)) == record  ✓")

# ── Per-class statistics ────────────────────────────────────────────────────
stats = compute_stats(dataset)
print("\nclass        images  annotations")
for class_id, name in enumerate(registry):
    print(f"{name:<12} {stats.per_class_image_count[class_id]:>6} "
          f"{stats.per_class_annotation_count[class_id]:>12}")
print(f"\nimages/class:      {stats.image_mean:.1f} ± {stats.image_std:.1f}")
print(f"annotations/class: {stats.annotation_mean:.1f} ± {stats.annotation_std:.1f}")
print(f"totals: {stats.total_images} images, {stats.total_annotations} annotations")

# ── Deterministic 90:10 split ───────────────────────────────────────────────
train, test = split_dataset(dataset, train_fraction=0.9, seed=7)
again, _ = split_dataset(dataset, train_fraction=0.9, seed=7)
assert [r.image_id for r in train.images] == [r.image_id for r in again.images]
print(f"\nsplit 90:10 with seed 7 -> train {len(train)}, test {len(test)} "
      "(identical on re-run)")
print("test images:", ", ".join(r.image_id for r in test.images))
