"""Scoring a detector: matching, P/R/F1, AP/mAP, curves, confusion matrix.

No neural model needed: the stub detector replays ground truth through a
configurable noise model, so you can watch every metric degrade as drop,
jitter, and class-flip noise increase.

Run: python demos/02_detector_evaluation.py
"""

import numpy as np

from platterkit import (
    BoundingBox,
    DetectorConfig,
    GroundTruthBox,
    ImageRecord,
    confidence_sweep,
    confusion_matrix,
    evaluate_detections,
    stub_detect,
)

rng = np.random.default_rng(42)
NUM_CLASSES = 4
NAMES = ["samosa", "jalebi", "dal", "idli"]

# ── Some ground truth ────────────────────────────────────────────────────────
records = []
for i in range(30):
    boxes = []
    for _ in range(rng.integers(1, 5)):
        cx, cy = rng.uniform(0.2, 0.8, size=2)
        w, h = rng.uniform(0.1, 0.3, size=2)
        boxes.append(
            GroundTruthBox(int(rng.integers(NUM_CLASSES)),
                           BoundingBox(float(cx), float(cy), float(w), float(h)))
        )
    records.append(ImageRecord(f"img{i:02d}", tuple(boxes)))
gt_by_image = {r.image_id: list(r.boxes) for r in records}

# ── Sweep the stub detector's noise knobs ───────────────────────────────────
print("noise level -> evaluation summary (IoU 0.5, confidence 0.5)\n")
print(f"{'drop':>5} {'jitter':>7} {'flip':>5} | {'macro P':>8} {'macro R':>8} "
      f"{'macro F1':>9} {'mAP':>7}")
for drop, jitter, flip in [
    (0.0, 0.00, 0.0),
    (0.1, 0.02, 0.0),
    (0.2, 0.05, 0.1),
    (0.4, 0.10, 0.2),
]:
    config = DetectorConfig(drop_rate=drop, jitter=jitter, class_flip_rate=flip, seed=1)
    preds_by_image = {
        r.image_id: list(stub_detect(r, config, NUM_CLASSES).predictions)
        for r in records
    }
    report = evaluate_detections(gt_by_image, preds_by_image, NUM_CLASSES, NAMES)
    print(f"{drop:>5.1f} {jitter:>7.2f} {flip:>5.1f} | "
          f"{report.macro_precision:>8.2%} {report.macro_recall:>8.2%} "
          f"{report.macro_f1:>9.2%} {report.mean_ap:>7.2%}")

# The zero-noise row is the glue invariant: a perfect detector scores 100%.

# ── A closer look at one noisy detector ─────────────────────────────────────
config = DetectorConfig(drop_rate=0.2, jitter=0.05, class_flip_rate=0.1, seed=1)
preds_by_image = {
    r.image_id: list(stub_detect(r, config, NUM_CLASSES).predictions)
    for r in records
}
report = evaluate_detections(gt_by_image, preds_by_image, NUM_CLASSES, NAMES)

print("\nper-class table (like a per-dish results appendix):")
print(f"{'class':<8} {'gt':>4} {'P':>8} {'R':>8} {'F1':>8} {'AP':>8}")
for row in report.per_class:
    ap = f"{row.ap:.2%}" if row.ap is not None else "n/a"
    print(f"{row.name:<8} {row.num_ground_truth:>4} {row.precision:>8.2%} "
          f"{row.recall:>8.2%} {row.f1:>8.2%} {ap:>8}")

# ── Confidence sweep: the data behind P/R/F1/PR curve figures ───────────────
sweep = confidence_sweep(gt_by_image, preds_by_image, NUM_CLASSES)
print(f"\nswept {len(sweep.thresholds)} confidence thresholds; "
      f"best mean F1 {sweep.best_f1:.2%} at confidence {sweep.best_f1_confidence:.3f}")
mean_pr = sweep.mean_pr.points
print("mean PR curve samples:",
      " ".join(f"({r:.2f},{p:.2f})" for r, p in mean_pr[::25]))

# ── Confusion matrix with a background row/column ───────────────────────────
cm = confusion_matrix(gt_by_image, preds_by_image, NUM_CLASSES)
labels = NAMES + ["bg"]
print("\nconfusion matrix (rows true, columns predicted):")
print("         " + " ".join(f"{l:>7}" for l in labels))
for label, row in zip(labels, cm.to_lists()):
    print(f"{label:>8} " + " ".join(f"{v:>7}" for v in row))
print("\noff-diagonal mass = wrong-class detections; the background column")
print("holds missed dishes, the background row spurious detections.")
