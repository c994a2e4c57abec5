"""Detection and multi-label classification metrics.

Implements IoU matching at a configurable threshold (0.5 by default),
per-class precision / recall / F1, average precision with all-points
interpolation under the monotone precision envelope, mAP, confidence sweeps
(P/R/F1 curves plus PR curves with a mean line), and a confusion matrix with
a background row/column for misses and spurious detections.

Conventions, chosen once and applied everywhere:

* a prediction is kept when ``confidence >= confidence_threshold``;
* a candidate pair matches when ``iou >= iou_threshold`` and the overlap is
  nonzero; equal-confidence predictions keep input order, equal-IoU
  candidates prefer the lowest ground-truth index;
* 0/0 ratios are reported as 0.0;
* classes without any ground truth have no defined AP: they are excluded
  from mAP and listed in ``MetricsReport.skipped_classes``. Macro averages
  run over classes with any ground truth or prediction.

All functions are pure; inputs are never mutated, so per-image work can be
farmed out to parallel workers and reduced in any order.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .dataset import BoundingBox, GroundTruthBox
from .errors import ConfidenceOutOfRangeError, NoEvaluableClassesError, UnknownClassError

__all__ = [
    "PredictedBox",
    "MatchOutcome",
    "PRF",
    "Curve",
    "SweepReport",
    "ConfusionMatrix",
    "LabelProbabilities",
    "ClassReport",
    "MetricsReport",
    "iou",
    "match_detections",
    "merge_outcomes",
    "match_dataset",
    "precision_recall_f1",
    "average_precision",
    "mean_average_precision",
    "confidence_sweep",
    "confusion_matrix",
    "classification_metrics",
    "evaluate_detections",
]


@dataclass(frozen=True)
class PredictedBox:
    """One detector output: class, confidence, and normalized box."""

    class_id: int
    confidence: float
    box: BoundingBox

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfidenceOutOfRangeError(
                f"confidence {self.confidence} outside [0, 1]"
            )
        if self.class_id < 0:
            raise UnknownClassError(f"negative class id {self.class_id}")


@dataclass(frozen=True)
class MatchOutcome:
    """Per-class TP/FP/FN counts at one (IoU, confidence) operating point.

    ``pairs`` lists matched (prediction index, ground-truth index, IoU)
    triples; it is empty for outcomes merged across images.
    """

    tp: dict[int, int]
    fp: dict[int, int]
    fn: dict[int, int]
    pairs: tuple[tuple[int, int, float], ...]
    iou_threshold: float
    confidence_threshold: float

    def classes(self) -> tuple[int, ...]:
        present = set(self.tp) | set(self.fp) | set(self.fn)
        return tuple(sorted(present))

    def totals(self) -> tuple[int, int, int]:
        return (
            sum(self.tp.values()),
            sum(self.fp.values()),
            sum(self.fn.values()),
        )


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Curve:
    """Ordered (abscissa, ordinate) pairs with strictly increasing abscissa."""

    points: tuple[tuple[float, float], ...]

    @property
    def xs(self) -> tuple[float, ...]:
        return tuple(p[0] for p in self.points)

    @property
    def ys(self) -> tuple[float, ...]:
        return tuple(p[1] for p in self.points)


@dataclass(frozen=True)
class SweepReport:
    """Metrics evaluated at every distinct confidence (plus 0, 0.5 and 1)."""

    thresholds: tuple[float, ...]
    precision_by_class: dict[int, tuple[float, ...]]
    recall_by_class: dict[int, tuple[float, ...]]
    f1_by_class: dict[int, tuple[float, ...]]
    mean_precision: tuple[float, ...]
    mean_recall: tuple[float, ...]
    mean_f1: tuple[float, ...]
    pr_by_class: dict[int, Curve]
    mean_pr: Curve
    best_f1_confidence: float
    best_f1: float


@dataclass(frozen=True)
class ConfusionMatrix:
    """(N+1) x (N+1) counts; row = true class, column = predicted class.

    Index ``num_classes`` is the background slot: row N holds spurious
    predictions, column N holds missed ground truths, and cell (N, N) is 0
    by definition (there is no universe of true negatives).
    """

    matrix: np.ndarray
    num_classes: int
    iou_threshold: float
    confidence_threshold: float

    @property
    def background_index(self) -> int:
        return self.num_classes

    def total(self) -> int:
        return int(self.matrix.sum())

    def to_lists(self) -> list[list[int]]:
        return self.matrix.astype(int).tolist()


@dataclass(frozen=True)
class LabelProbabilities:
    """Per-image class probabilities plus the true label set."""

    image_id: str
    probabilities: tuple[float, ...]
    true_labels: frozenset[int]

    def __post_init__(self):
        for p in self.probabilities:
            if not 0.0 <= p <= 1.0:
                raise ConfidenceOutOfRangeError(f"probability {p} outside [0, 1]")
        for label in self.true_labels:
            if not 0 <= label < len(self.probabilities):
                raise UnknownClassError(
                    f"label {label} outside the {len(self.probabilities)}-class vector"
                )


@dataclass(frozen=True)
class ClassReport:
    class_id: int
    name: str | None
    num_ground_truth: int
    precision: float
    recall: float
    f1: float
    ap: float | None


@dataclass(frozen=True)
class MetricsReport:
    """Per-class table plus aggregates, shaped like a per-dish results table.

    ``ap_mode`` records the interpolation/ranking convention so exported
    numbers are self-describing. ``curves`` and ``confusion`` are filled in
    when the caller asks for them (they cost extra passes over the data).
    """

    task: str
    per_class: tuple[ClassReport, ...]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mean_ap: float
    evaluated_classes: tuple[int, ...]
    skipped_classes: tuple[int, ...]
    iou_threshold: float | None
    confidence_threshold: float
    ap_mode: str
    curves: "SweepReport | None" = None
    confusion: "ConfusionMatrix | None" = None


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def _prf(tp: int, fp: int, fn: int) -> PRF:
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = _safe_div(2.0 * precision * recall, precision + recall)
    return PRF(precision, recall, f1)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes on the same image, in [0, 1].

    Areas come from corners clamped to the unit square; a degenerate
    zero-area union yields 0.0.
    """
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    inter = iw * ih if iw > 0.0 and ih > 0.0 else 0.0
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def match_detections(
    gt: Sequence[GroundTruthBox],
    preds: Sequence[PredictedBox],
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.5,
) -> MatchOutcome:
    """Greedily match predictions to ground truth within one image.

    Predictions below the confidence threshold are discarded; the rest are
    processed in descending confidence (ties keep input order). Each
    prediction claims the still-unmatched ground truth of its own class with
    the highest IoU >= iou_threshold (TP), else counts as FP. Ground truths
    left unmatched are FN. A second hit on an already-matched ground truth
    is an FP, which is what penalizes duplicate detections.
    """
    kept = [
        (idx, pred)
        for idx, pred in enumerate(preds)
        if pred.confidence >= confidence_threshold
    ]
    kept.sort(key=lambda item: -item[1].confidence)

    tp: dict[int, int] = defaultdict(int)
    fp: dict[int, int] = defaultdict(int)
    fn: dict[int, int] = defaultdict(int)
    gt_taken = [False] * len(gt)
    pairs = []
    for pred_idx, pred in kept:
        best_iou = 0.0
        best_gt = -1
        for gt_idx, truth in enumerate(gt):
            if truth.class_id != pred.class_id or gt_taken[gt_idx]:
                continue
            overlap = iou(pred.box, truth.box)
            # Strict > keeps the lowest gt index on exact IoU ties, and a
            # zero-overlap pair can never match even at iou_threshold 0.
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou = overlap
                best_gt = gt_idx
        if best_gt >= 0:
            gt_taken[best_gt] = True
            tp[pred.class_id] += 1
            pairs.append((pred_idx, best_gt, best_iou))
        else:
            fp[pred.class_id] += 1
    for gt_idx, truth in enumerate(gt):
        if not gt_taken[gt_idx]:
            fn[truth.class_id] += 1
    return MatchOutcome(
        tp=dict(tp),
        fp=dict(fp),
        fn=dict(fn),
        pairs=tuple(pairs),
        iou_threshold=iou_threshold,
        confidence_threshold=confidence_threshold,
    )


def merge_outcomes(outcomes: Sequence[MatchOutcome]) -> MatchOutcome:
    """Sum per-class counts across images. Pairs are dropped (per-image only)."""
    if not outcomes:
        raise ValueError("nothing to merge")
    tp: dict[int, int] = defaultdict(int)
    fp: dict[int, int] = defaultdict(int)
    fn: dict[int, int] = defaultdict(int)
    for outcome in outcomes:
        for target, source in ((tp, outcome.tp), (fp, outcome.fp), (fn, outcome.fn)):
            for class_id, count in source.items():
                target[class_id] += count
    return MatchOutcome(
        tp=dict(tp),
        fp=dict(fp),
        fn=dict(fn),
        pairs=(),
        iou_threshold=outcomes[0].iou_threshold,
        confidence_threshold=outcomes[0].confidence_threshold,
    )


def _image_order(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
) -> list[str]:
    order = list(gt_by_image)
    order.extend(key for key in preds_by_image if key not in gt_by_image)
    return order


def match_dataset(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.5,
) -> MatchOutcome:
    """Match every image and sum the per-class counts."""
    outcomes = [
        match_detections(
            gt_by_image.get(image_id, ()),
            preds_by_image.get(image_id, ()),
            iou_threshold,
            confidence_threshold,
        )
        for image_id in _image_order(gt_by_image, preds_by_image)
    ]
    if not outcomes:
        return MatchOutcome({}, {}, {}, (), iou_threshold, confidence_threshold)
    return merge_outcomes(outcomes)


def precision_recall_f1(outcome: MatchOutcome) -> tuple[dict[int, PRF], PRF]:
    """Per-class and macro P/R/F1 from matched counts; 0/0 reports as 0."""
    per_class = {}
    for class_id in outcome.classes():
        per_class[class_id] = _prf(
            outcome.tp.get(class_id, 0),
            outcome.fp.get(class_id, 0),
            outcome.fn.get(class_id, 0),
        )
    macro = PRF(
        _safe_div(sum(s.precision for s in per_class.values()), len(per_class)),
        _safe_div(sum(s.recall for s in per_class.values()), len(per_class)),
        _safe_div(sum(s.f1 for s in per_class.values()), len(per_class)),
    )
    return per_class, macro


def _ap_from_points(recalls: np.ndarray, precisions: np.ndarray) -> float:
    """Area under the non-increasing precision envelope, all-points rule."""
    mrec = np.concatenate(([0.0], recalls, [1.0]))
    mpre = np.concatenate(([0.0], precisions, [0.0]))
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    changed = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def _ranked_class_detections(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
    class_id: int,
    iou_threshold: float,
) -> tuple[int, np.ndarray]:
    """Pool one class across images; return (n_gt, tp flags) in
    descending-confidence rank order."""
    order = _image_order(gt_by_image, preds_by_image)
    gt_boxes = {
        image_id: [g.box for g in gt_by_image.get(image_id, ()) if g.class_id == class_id]
        for image_id in order
    }
    n_gt = sum(len(boxes) for boxes in gt_boxes.values())

    ranked: list[tuple[float, str, BoundingBox]] = []
    for image_id in order:
        for pred in preds_by_image.get(image_id, ()):
            if pred.class_id == class_id:
                ranked.append((pred.confidence, image_id, pred.box))
    ranked.sort(key=lambda item: -item[0])

    taken = {image_id: [False] * len(boxes) for image_id, boxes in gt_boxes.items()}
    tp_flags = np.zeros(len(ranked), dtype=bool)
    for rank, (_, image_id, pbox) in enumerate(ranked):
        best_iou = 0.0
        best_gt = -1
        for gt_idx, gbox in enumerate(gt_boxes[image_id]):
            if taken[image_id][gt_idx]:
                continue
            overlap = iou(pbox, gbox)
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou = overlap
                best_gt = gt_idx
        if best_gt >= 0:
            taken[image_id][best_gt] = True
            tp_flags[rank] = True
    return n_gt, tp_flags


def average_precision(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
    class_id: int,
    iou_threshold: float = 0.5,
) -> float | None:
    """AP of one class pooled over all images, or None without ground truth.

    All predictions of the class are ranked by descending confidence
    (confidence threshold 0), matched greedily, and the area under the
    monotone precision envelope over recall is integrated with the
    all-points rule. AP depends on confidences only through their ranking.
    """
    n_gt, tp_flags = _ranked_class_detections(
        gt_by_image, preds_by_image, class_id, iou_threshold
    )
    if n_gt == 0:
        return None
    if tp_flags.size == 0:
        return 0.0
    tp_cum = np.cumsum(tp_flags)
    fp_cum = np.cumsum(~tp_flags)
    recalls = tp_cum / n_gt
    precisions = tp_cum / (tp_cum + fp_cum)
    return _ap_from_points(recalls, precisions)


def mean_average_precision(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
    num_classes: int,
    iou_threshold: float = 0.5,
) -> float:
    """Mean AP over the classes that have ground truth."""
    aps = []
    for class_id in range(num_classes):
        ap = average_precision(gt_by_image, preds_by_image, class_id, iou_threshold)
        if ap is not None:
            aps.append(ap)
    if not aps:
        raise NoEvaluableClassesError("no class has any ground truth")
    return sum(aps) / len(aps)


def _pr_curve_points(
    n_gt: int, tp_flags: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Distinct recall levels with envelope precision at each."""
    if n_gt == 0:
        return np.array([]), np.array([])
    if tp_flags.size == 0:
        return np.array([0.0]), np.array([0.0])
    tp_cum = np.cumsum(tp_flags)
    fp_cum = np.cumsum(~tp_flags)
    recalls = tp_cum / n_gt
    precisions = tp_cum / (tp_cum + fp_cum)
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    # Keep the last (lowest-envelope) point of each distinct recall level.
    last_of_level = np.nonzero(
        np.concatenate((recalls[1:] != recalls[:-1], [True]))
    )[0]
    xs = np.concatenate(([0.0], recalls[last_of_level]))
    ys = np.concatenate(([envelope[0]], envelope[last_of_level]))
    if xs.size > 1 and xs[0] == xs[1]:
        xs, ys = xs[1:], ys[1:]
    return xs, ys


def _interp_envelope(grid: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample a PR envelope at the given recall grid; 0 beyond max recall."""
    if xs.size == 0:
        return np.zeros_like(grid)
    idx = np.searchsorted(xs, grid, side="left")
    out = np.zeros_like(grid)
    inside = idx < xs.size
    out[inside] = ys[idx[inside]]
    return out


def confidence_sweep(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
    num_classes: int,
    iou_threshold: float = 0.5,
) -> SweepReport:
    """P/R/F1 against confidence, per class and averaged, plus PR curves.

    The sweep grid is every distinct prediction confidence together with
    0, 0.5 and 1. Because matching processes predictions in descending
    confidence, matching once with threshold 0 and then counting kept
    predictions reproduces a from-scratch evaluation at every threshold.
    The mean curves average the per-class curves over classes with any
    ground truth or prediction; ``best_f1_confidence`` is the (lowest)
    grid point maximizing mean F1.
    """
    order = _image_order(gt_by_image, preds_by_image)
    n_gt = {c: 0 for c in range(num_classes)}
    conf_by_class: dict[int, list[float]] = {c: [] for c in range(num_classes)}
    hit_by_class: dict[int, list[bool]] = {c: [] for c in range(num_classes)}
    for image_id in order:
        gt = gt_by_image.get(image_id, ())
        preds = preds_by_image.get(image_id, ())
        for truth in gt:
            n_gt[truth.class_id] += 1
        outcome = match_detections(gt, preds, iou_threshold, confidence_threshold=0.0)
        matched = {pred_idx for pred_idx, _, _ in outcome.pairs}
        for pred_idx, pred in enumerate(preds):
            conf_by_class[pred.class_id].append(pred.confidence)
            hit_by_class[pred.class_id].append(pred_idx in matched)

    all_confs = sorted(
        {conf for confs in conf_by_class.values() for conf in confs} | {0.0, 0.5, 1.0}
    )
    thresholds = np.array(all_confs, dtype=float)

    evaluable = [
        c for c in range(num_classes) if n_gt[c] > 0 or conf_by_class[c]
    ]
    precision_by_class: dict[int, tuple[float, ...]] = {}
    recall_by_class: dict[int, tuple[float, ...]] = {}
    f1_by_class: dict[int, tuple[float, ...]] = {}
    pr_by_class: dict[int, Curve] = {}

    grid = np.linspace(0.0, 1.0, 101)
    mean_pr_acc = np.zeros_like(grid)
    pr_classes = 0
    stack_p, stack_r, stack_f = [], [], []
    for class_id in evaluable:
        confs = np.array(conf_by_class[class_id], dtype=float)
        hits = np.array(hit_by_class[class_id], dtype=bool)
        sorted_idx = np.argsort(confs, kind="stable")
        confs_sorted = confs[sorted_idx]
        hits_sorted = hits[sorted_idx]
        # Suffix sums: predictions kept at threshold t are those with
        # confidence >= t, i.e. a suffix of the ascending sort.
        tp_suffix = np.concatenate(
            (np.cumsum(hits_sorted[::-1])[::-1], [0])
        )
        first_kept = np.searchsorted(confs_sorted, thresholds, side="left")
        tp_at = tp_suffix[first_kept].astype(float)
        kept_at = (confs.size - first_kept).astype(float)
        precision = np.where(kept_at > 0, tp_at / np.maximum(kept_at, 1.0), 0.0)
        recall = tp_at / n_gt[class_id] if n_gt[class_id] else np.zeros_like(tp_at)
        psum = precision + recall
        f1 = np.where(psum > 0, 2.0 * precision * recall / np.maximum(psum, 1.0e-300), 0.0)
        precision_by_class[class_id] = tuple(precision.tolist())
        recall_by_class[class_id] = tuple(recall.tolist())
        f1_by_class[class_id] = tuple(f1.tolist())
        stack_p.append(precision)
        stack_r.append(recall)
        stack_f.append(f1)

        if n_gt[class_id] > 0:
            _, tp_flags = _ranked_class_detections(
                gt_by_image, preds_by_image, class_id, iou_threshold
            )
            xs, ys = _pr_curve_points(n_gt[class_id], tp_flags)
            pr_by_class[class_id] = Curve(tuple(zip(xs.tolist(), ys.tolist())))
            mean_pr_acc += _interp_envelope(grid, xs, ys)
            pr_classes += 1

    if stack_p:
        mean_precision = np.mean(np.stack(stack_p), axis=0)
        mean_recall = np.mean(np.stack(stack_r), axis=0)
        mean_f1 = np.mean(np.stack(stack_f), axis=0)
    else:
        mean_precision = np.zeros_like(thresholds)
        mean_recall = np.zeros_like(thresholds)
        mean_f1 = np.zeros_like(thresholds)

    mean_pr_values = mean_pr_acc / pr_classes if pr_classes else np.zeros_like(grid)
    best_idx = int(np.argmax(mean_f1)) if mean_f1.size else 0

    return SweepReport(
        thresholds=tuple(thresholds.tolist()),
        precision_by_class=precision_by_class,
        recall_by_class=recall_by_class,
        f1_by_class=f1_by_class,
        mean_precision=tuple(mean_precision.tolist()),
        mean_recall=tuple(mean_recall.tolist()),
        mean_f1=tuple(mean_f1.tolist()),
        pr_by_class=pr_by_class,
        mean_pr=Curve(tuple(zip(grid.tolist(), mean_pr_values.tolist()))),
        best_f1_confidence=float(thresholds[best_idx]) if thresholds.size else 0.0,
        best_f1=float(mean_f1[best_idx]) if mean_f1.size else 0.0,
    )


def confusion_matrix(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
    num_classes: int,
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.5,
) -> ConfusionMatrix:
    """Cross-class confusion counts from class-agnostic geometric matching.

    Boxes are first paired purely by IoU (greedy, highest overlap first,
    ties to the lowest ground-truth then prediction index), so a correct
    box with the wrong label lands in an off-diagonal cell instead of
    vanishing into misses. Unmatched ground truths increment the
    background column, unmatched predictions the background row.
    """
    matrix = np.zeros((num_classes + 1, num_classes + 1), dtype=np.int64)
    background = num_classes
    for image_id in _image_order(gt_by_image, preds_by_image):
        gt = gt_by_image.get(image_id, ())
        kept = {
            idx: pred
            for idx, pred in enumerate(preds_by_image.get(image_id, ()))
            if pred.confidence >= confidence_threshold
        }
        candidates = []
        for gt_idx, truth in enumerate(gt):
            for pred_idx, pred in kept.items():
                overlap = iou(truth.box, pred.box)
                if overlap >= iou_threshold and overlap > 0.0:
                    candidates.append((-overlap, gt_idx, pred_idx))
        candidates.sort()
        gt_taken = [False] * len(gt)
        pred_taken = {pred_idx: False for pred_idx in kept}
        for _, gt_idx, pred_idx in candidates:
            if gt_taken[gt_idx] or pred_taken[pred_idx]:
                continue
            gt_taken[gt_idx] = True
            pred_taken[pred_idx] = True
            matrix[gt[gt_idx].class_id][kept[pred_idx].class_id] += 1
        for gt_idx, truth in enumerate(gt):
            if not gt_taken[gt_idx]:
                matrix[truth.class_id][background] += 1
        for pred_idx, pred in kept.items():
            if not pred_taken[pred_idx]:
                matrix[background][pred.class_id] += 1
    return ConfusionMatrix(
        matrix=matrix,
        num_classes=num_classes,
        iou_threshold=iou_threshold,
        confidence_threshold=confidence_threshold,
    )


def _report_from_counts(
    task: str,
    num_classes: int,
    class_names: Sequence[str] | None,
    counts: Mapping[int, tuple[int, int, int]],
    gt_totals: Mapping[int, int],
    aps: Mapping[int, float | None],
    iou_threshold: float | None,
    confidence_threshold: float,
    ap_mode: str,
) -> MetricsReport:
    per_class = []
    evaluable_scores = []
    evaluated = []
    skipped = []
    for class_id in range(num_classes):
        tp, fp, fn = counts.get(class_id, (0, 0, 0))
        scores = _prf(tp, fp, fn)
        ap = aps.get(class_id)
        per_class.append(
            ClassReport(
                class_id=class_id,
                name=class_names[class_id] if class_names else None,
                num_ground_truth=gt_totals.get(class_id, 0),
                precision=scores.precision,
                recall=scores.recall,
                f1=scores.f1,
                ap=ap,
            )
        )
        if tp + fp + fn > 0:
            evaluable_scores.append(scores)
        if ap is None:
            skipped.append(class_id)
        else:
            evaluated.append(class_id)
    if not evaluated:
        raise NoEvaluableClassesError("no class has any ground truth")
    macro = PRF(
        _safe_div(sum(s.precision for s in evaluable_scores), len(evaluable_scores)),
        _safe_div(sum(s.recall for s in evaluable_scores), len(evaluable_scores)),
        _safe_div(sum(s.f1 for s in evaluable_scores), len(evaluable_scores)),
    )
    mean_ap = sum(aps[c] for c in evaluated) / len(evaluated)
    return MetricsReport(
        task=task,
        per_class=tuple(per_class),
        macro_precision=macro.precision,
        macro_recall=macro.recall,
        macro_f1=macro.f1,
        mean_ap=mean_ap,
        evaluated_classes=tuple(evaluated),
        skipped_classes=tuple(skipped),
        iou_threshold=iou_threshold,
        confidence_threshold=confidence_threshold,
        ap_mode=ap_mode,
    )


def evaluate_detections(
    gt_by_image: Mapping[str, Sequence[GroundTruthBox]],
    preds_by_image: Mapping[str, Sequence[PredictedBox]],
    num_classes: int,
    class_names: Sequence[str] | None = None,
    iou_threshold: float = 0.5,
    confidence_threshold: float = 0.5,
    include_curves: bool = False,
    include_confusion: bool = False,
) -> MetricsReport:
    """Full per-class detection report: P/R/F1 at the confidence threshold,
    AP from the threshold-free ranking, macro aggregates and mAP, plus
    curves and a confusion matrix on request."""
    outcome = match_dataset(
        gt_by_image, preds_by_image, iou_threshold, confidence_threshold
    )
    counts = {
        class_id: (
            outcome.tp.get(class_id, 0),
            outcome.fp.get(class_id, 0),
            outcome.fn.get(class_id, 0),
        )
        for class_id in range(num_classes)
    }
    gt_totals: dict[int, int] = defaultdict(int)
    for boxes in gt_by_image.values():
        for truth in boxes:
            gt_totals[truth.class_id] += 1
    aps = {
        class_id: average_precision(
            gt_by_image, preds_by_image, class_id, iou_threshold
        )
        for class_id in range(num_classes)
    }
    report = _report_from_counts(
        task="detection",
        num_classes=num_classes,
        class_names=class_names,
        counts=counts,
        gt_totals=dict(gt_totals),
        aps=aps,
        iou_threshold=iou_threshold,
        confidence_threshold=confidence_threshold,
        ap_mode="ranked-all-points",
    )
    if include_curves or include_confusion:
        report = replace(
            report,
            curves=confidence_sweep(
                gt_by_image, preds_by_image, num_classes, iou_threshold
            )
            if include_curves
            else None,
            confusion=confusion_matrix(
                gt_by_image,
                preds_by_image,
                num_classes,
                iou_threshold,
                confidence_threshold,
            )
            if include_confusion
            else None,
        )
    return report


def classification_metrics(
    samples: Sequence[LabelProbabilities],
    prob_threshold: float = 0.5,
    class_names: Sequence[str] | None = None,
) -> MetricsReport:
    """Multi-label classification report from per-image probability vectors.

    P/R/F1 come from thresholding each class probability; AP ranks images
    by class probability and integrates the precision envelope, with
    equal-probability images collapsed into one PR point so the result
    matches an explicit sweep over every distinct threshold. Classes with
    no positive image have undefined AP and are excluded from mAP.
    """
    if not samples:
        raise NoEvaluableClassesError("no samples")
    num_classes = len(samples[0].probabilities)
    for sample in samples:
        if len(sample.probabilities) != num_classes:
            raise ValueError(
                f"probability vector of {sample.image_id!r} has length "
                f"{len(sample.probabilities)}, expected {num_classes}"
            )

    counts: dict[int, tuple[int, int, int]] = {}
    gt_totals: dict[int, int] = {}
    aps: dict[int, float | None] = {}
    for class_id in range(num_classes):
        probs = np.array([s.probabilities[class_id] for s in samples], dtype=float)
        positive = np.array(
            [class_id in s.true_labels for s in samples], dtype=bool
        )
        predicted = probs >= prob_threshold
        tp = int(np.sum(predicted & positive))
        fp = int(np.sum(predicted & ~positive))
        fn = int(np.sum(~predicted & positive))
        counts[class_id] = (tp, fp, fn)
        n_pos = int(np.sum(positive))
        gt_totals[class_id] = n_pos
        if n_pos == 0:
            aps[class_id] = None
            continue
        order = np.argsort(-probs, kind="stable")
        sorted_probs = probs[order]
        sorted_pos = positive[order]
        # One PR point per distinct probability: the whole tie group is
        # either kept or dropped by a threshold.
        boundaries = np.nonzero(
            np.concatenate((sorted_probs[1:] != sorted_probs[:-1], [True]))
        )[0]
        tp_cum = np.cumsum(sorted_pos)[boundaries]
        kept = boundaries + 1
        recalls = tp_cum / n_pos
        precisions = tp_cum / kept
        aps[class_id] = _ap_from_points(recalls, precisions)

    return _report_from_counts(
        task="classification",
        num_classes=num_classes,
        class_names=class_names,
        counts=counts,
        gt_totals=gt_totals,
        aps=aps,
        iou_threshold=None,
        confidence_threshold=prob_threshold,
        ap_mode="threshold-all-points",
    )
