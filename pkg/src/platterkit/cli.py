"""Batch entry points: dataset QA, stats, splits, stub detection,
evaluation tables, curves, confusion matrices, and the HTTP service.

All tabular output is CSV with percentages printed to two decimals; every
command is deterministic given the same inputs and ``--seed``. Commands exit
non-zero after printing ``error: ...`` to stderr on any validation problem.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .dataset import (
    ClassRegistry,
    Dataset,
    compute_stats,
    parse_class_list,
    parse_yolo_label_file,
    split_dataset,
    stats_from_counts,
)
from .detections import (
    DetectorConfig,
    parse_detection_file,
    serialize_detection_file,
    stub_detect,
)
from .errors import FormatError, PlatterError
from .metrics import (
    classification_metrics,
    confidence_sweep,
    confusion_matrix,
    evaluate_detections,
    LabelProbabilities,
    MetricsReport,
)

__all__ = ["main"]


def _read_text(path: Path) -> str:
    # errors="replace" keeps undecodable bytes flowing into the parsers,
    # which then reject them with a line number instead of crashing here.
    return path.read_text(encoding="utf-8", errors="replace")


def _load_registry(path: str) -> ClassRegistry:
    return parse_class_list(_read_text(Path(path)))


def _label_files(labels_dir: str) -> list[Path]:
    return sorted(Path(labels_dir).glob("*.txt"))


def _load_dataset(classes: str, labels_dir: str) -> Dataset:
    registry = _load_registry(classes)
    images = []
    for path in _label_files(labels_dir):
        try:
            images.append(parse_yolo_label_file(path.stem, _read_text(path), registry))
        except FormatError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return Dataset(registry, tuple(images))


def _load_detections(detections_dir: str, registry: ClassRegistry) -> dict:
    detections = {}
    for path in sorted(Path(detections_dir).glob("*.txt")):
        try:
            detections[path.stem] = parse_detection_file(
                path.stem, _read_text(path), registry
            )
        except FormatError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return detections


def _open_out(out: str | None):
    if out is None or out == "-":
        return sys.stdout, False
    return open(out, "w", encoding="utf-8", newline=""), True


def _csv_writer(stream):
    return csv.writer(stream, lineterminator="\n")


def _pct(value: float | None) -> str:
    return "" if value is None else f"{100.0 * value:.2f}"


def _write_report(report: MetricsReport, out: str | None):
    stream, close = _open_out(out)
    try:
        writer = _csv_writer(stream)
        writer.writerow(["class_id", "name", "ground_truth", "precision", "recall", "f1", "ap"])
        for row in report.per_class:
            writer.writerow(
                [
                    row.class_id,
                    row.name or "",
                    row.num_ground_truth,
                    _pct(row.precision),
                    _pct(row.recall),
                    _pct(row.f1),
                    _pct(row.ap),
                ]
            )
        writer.writerow(["summary", "macro_precision", _pct(report.macro_precision)])
        writer.writerow(["summary", "macro_recall", _pct(report.macro_recall)])
        writer.writerow(["summary", "macro_f1", _pct(report.macro_f1)])
        writer.writerow(["summary", "mAP", _pct(report.mean_ap)])
        if report.iou_threshold is not None:
            writer.writerow(["summary", "iou_threshold", f"{report.iou_threshold:.2f}"])
        writer.writerow(
            ["summary", "confidence_threshold", f"{report.confidence_threshold:.2f}"]
        )
        writer.writerow(["summary", "ap_mode", report.ap_mode])
        if report.skipped_classes:
            writer.writerow(
                [
                    "summary",
                    "skipped_classes_no_ground_truth",
                    ";".join(str(c) for c in report.skipped_classes),
                ]
            )
    finally:
        if close:
            stream.close()


def _gt_by_image(dataset: Dataset) -> dict:
    return {record.image_id: list(record.boxes) for record in dataset.images}


def _preds_by_image(detections: dict) -> dict:
    return {image_id: list(d.predictions) for image_id, d in detections.items()}


# -- commands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    problems = []
    try:
        registry = _load_registry(args.classes)
    except FormatError as exc:
        print(f"error: {args.classes}: {exc}", file=sys.stderr)
        return 1
    n_images = 0
    n_boxes = 0
    for path in _label_files(args.labels):
        try:
            record = parse_yolo_label_file(path.stem, _read_text(path), registry)
            n_images += 1
            n_boxes += len(record.boxes)
        except FormatError as exc:
            problems.append(f"{path}: {exc}")
    if args.detections:
        for path in sorted(Path(args.detections).glob("*.txt")):
            try:
                parse_detection_file(path.stem, _read_text(path), registry)
            except FormatError as exc:
                problems.append(f"{path}: {exc}")
    for problem in problems:
        print(f"error: {problem}", file=sys.stderr)
    if problems:
        return 1
    print(f"OK: {len(registry)} classes, {n_images} images, {n_boxes} boxes")
    return 0


def cmd_stats(args) -> int:
    registry = None
    if args.counts:
        rows = []
        with open(args.counts, encoding="utf-8", newline="") as fh:
            for line_no, row in enumerate(csv.reader(fh), start=1):
                if not row or all(not c.strip() for c in row):
                    continue
                if not row[0].strip().lstrip("-").isdigit():
                    if line_no == 1:
                        continue
                    raise FormatError(f"bad counts row {row!r}", line=line_no)
                if len(row) != 4:
                    raise FormatError(
                        f"expected class_id,name,images,annotations, got {row!r}",
                        line=line_no,
                    )
                rows.append((int(row[0]), row[1], int(row[2]), int(row[3])))
        rows.sort()
        names = [r[1] for r in rows]
        image_counts = [r[2] for r in rows]
        ann_counts = [r[3] for r in rows]
        # The unique-image total is unknowable from per-class counts alone;
        # the column sum is reported in its place.
        stats = stats_from_counts(image_counts, ann_counts, sum(image_counts))
    else:
        dataset = _load_dataset(args.classes, args.labels)
        names = list(dataset.registry.names)
        stats = compute_stats(dataset)

    stream, close = _open_out(args.out)
    try:
        writer = _csv_writer(stream)
        writer.writerow(["class_id", "name", "images", "annotations"])
        for class_id, name in enumerate(names):
            writer.writerow(
                [
                    class_id,
                    name,
                    stats.per_class_image_count[class_id],
                    stats.per_class_annotation_count[class_id],
                ]
            )
        writer.writerow(["summary", "total_images", stats.total_images])
        writer.writerow(
            ["summary", "image_count_column_sum", sum(stats.per_class_image_count)]
        )
        writer.writerow(["summary", "total_annotations", stats.total_annotations])
        writer.writerow(["summary", "images_per_class_mean", f"{stats.image_mean:.2f}"])
        writer.writerow(["summary", "images_per_class_std", f"{stats.image_std:.2f}"])
        writer.writerow(
            ["summary", "annotations_per_class_mean", f"{stats.annotation_mean:.2f}"]
        )
        writer.writerow(
            ["summary", "annotations_per_class_std", f"{stats.annotation_std:.2f}"]
        )
    finally:
        if close:
            stream.close()
    return 0


def cmd_split(args) -> int:
    dataset = _load_dataset(args.classes, args.labels)
    train, test = split_dataset(dataset, args.fraction, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "train.txt").write_text(
        "".join(f"{r.image_id}\n" for r in train.images), encoding="utf-8"
    )
    (out_dir / "test.txt").write_text(
        "".join(f"{r.image_id}\n" for r in test.images), encoding="utf-8"
    )
    print(f"split,train,{len(train)},test,{len(test)}")
    return 0


def cmd_stub_detect(args) -> int:
    dataset = _load_dataset(args.classes, args.labels)
    config = DetectorConfig(
        drop_rate=args.drop, jitter=args.jitter, class_flip_rate=args.flip, seed=args.seed
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    n_preds = 0
    for record in dataset.images:
        detections = stub_detect(record, config, num_classes=len(dataset.registry))
        (out_dir / f"{record.image_id}.txt").write_text(
            serialize_detection_file(detections), encoding="utf-8"
        )
        n_preds += len(detections.predictions)
    print(f"stub-detect,images,{len(dataset)},predictions,{n_preds}")
    return 0


def cmd_eval_det(args) -> int:
    dataset = _load_dataset(args.classes, args.labels)
    detections = _load_detections(args.detections, dataset.registry)
    gt_by_image = _gt_by_image(dataset)
    preds_by_image = _preds_by_image(detections)
    for image_id in preds_by_image:
        gt_by_image.setdefault(image_id, [])
    report = evaluate_detections(
        gt_by_image,
        preds_by_image,
        num_classes=len(dataset.registry),
        class_names=list(dataset.registry.names),
        iou_threshold=args.iou,
        confidence_threshold=args.conf,
    )
    _write_report(report, args.out)
    return 0


def cmd_eval_cls(args) -> int:
    dataset = _load_dataset(args.classes, args.labels)
    num_classes = len(dataset.registry)
    truth = {
        record.image_id: frozenset(gt.class_id for gt in record.boxes)
        for record in dataset.images
    }
    samples = []
    with open(args.probs, encoding="utf-8", newline="") as fh:
        for line_no, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if line_no == 1 and row[0].strip() == "image_id":
                continue
            if len(row) != num_classes + 1:
                raise FormatError(
                    f"expected image_id plus {num_classes} probabilities",
                    line=line_no,
                )
            image_id = row[0].strip()
            if image_id not in truth:
                raise FormatError(f"unknown image id {image_id!r}", line=line_no)
            try:
                probs = tuple(float(v) for v in row[1:])
            except ValueError:
                raise FormatError(f"bad probability in {row!r}", line=line_no) from None
            samples.append(LabelProbabilities(image_id, probs, truth[image_id]))
    report = classification_metrics(
        samples,
        prob_threshold=args.conf,
        class_names=list(dataset.registry.names),
    )
    _write_report(report, args.out)
    return 0


def cmd_curves(args) -> int:
    dataset = _load_dataset(args.classes, args.labels)
    detections = _load_detections(args.detections, dataset.registry)
    gt_by_image = _gt_by_image(dataset)
    preds_by_image = _preds_by_image(detections)
    for image_id in preds_by_image:
        gt_by_image.setdefault(image_id, [])
    sweep = confidence_sweep(
        gt_by_image,
        preds_by_image,
        num_classes=len(dataset.registry),
        iou_threshold=args.iou,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = dataset.registry.names

    for metric, by_class, mean in (
        ("precision", sweep.precision_by_class, sweep.mean_precision),
        ("recall", sweep.recall_by_class, sweep.mean_recall),
        ("f1", sweep.f1_by_class, sweep.mean_f1),
    ):
        with open(out_dir / f"{metric}_vs_confidence.csv", "w", encoding="utf-8", newline="") as fh:
            writer = _csv_writer(fh)
            class_ids = sorted(by_class)
            writer.writerow(
                ["confidence", "mean"] + [names[c] for c in class_ids]
            )
            for k, threshold in enumerate(sweep.thresholds):
                writer.writerow(
                    [f"{threshold:.6f}", f"{mean[k]:.6f}"]
                    + [f"{by_class[c][k]:.6f}" for c in class_ids]
                )

    with open(out_dir / "pr_curve.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv_writer(fh)
        writer.writerow(["series", "recall", "precision"])
        for recall, precision in sweep.mean_pr.points:
            writer.writerow(["mean", f"{recall:.6f}", f"{precision:.6f}"])
        for class_id in sorted(sweep.pr_by_class):
            for recall, precision in sweep.pr_by_class[class_id].points:
                writer.writerow(
                    [names[class_id], f"{recall:.6f}", f"{precision:.6f}"]
                )

    print(f"curves,best_f1_confidence,{sweep.best_f1_confidence:.4f}")
    print(f"curves,best_f1,{_pct(sweep.best_f1)}")
    return 0


def cmd_confusion(args) -> int:
    dataset = _load_dataset(args.classes, args.labels)
    detections = _load_detections(args.detections, dataset.registry)
    gt_by_image = _gt_by_image(dataset)
    preds_by_image = _preds_by_image(detections)
    for image_id in preds_by_image:
        gt_by_image.setdefault(image_id, [])
    cm = confusion_matrix(
        gt_by_image,
        preds_by_image,
        num_classes=len(dataset.registry),
        iou_threshold=args.iou,
        confidence_threshold=args.conf,
    )
    labels = list(dataset.registry.names) + ["background"]
    stream, close = _open_out(args.out)
    try:
        writer = _csv_writer(stream)
        writer.writerow(["true\\predicted"] + labels)
        for row_label, row in zip(labels, cm.to_lists()):
            writer.writerow([row_label] + row)
    finally:
        if close:
            stream.close()
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .nutrition import CalorieTable
    from .service import ServiceConfig, create_app

    table = CalorieTable.from_csv(_read_text(Path(args.calorie_table)))
    config = ServiceConfig(
        data_dir=Path(args.data_dir),
        calorie_table=table,
        confidence_threshold=args.conf,
        snapshot_every=args.snapshot_every,
        ui_dir=Path(args.ui_dir) if args.ui_dir else None,
    )
    app = create_app(config)
    uvicorn.run(app, host=args.address, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="platterkit",
        description="Dataset QA, detection evaluation, and the diet service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, labels=True, detections=False):
        p.add_argument("--classes", required=True, help="class list file, one name per line")
        if labels:
            p.add_argument("--labels", required=True, help="directory of YOLO label files")
        if detections:
            p.add_argument("--detections", required=True, help="directory of detection files")

    p = sub.add_parser("validate", help="check class list, labels, and detections")
    add_common(p)
    p.add_argument("--detections", default=None, help="optional detections directory")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="per-class image/annotation counts and spread")
    p.add_argument("--classes", help="class list file")
    p.add_argument("--labels", help="directory of YOLO label files")
    p.add_argument(
        "--counts",
        help="precomputed counts CSV (class_id,name,images,annotations) instead of labels",
    )
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("split", help="deterministic train/test split")
    add_common(p)
    p.add_argument("--fraction", type=float, default=0.9, help="train fraction (default 0.9)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for train.txt/test.txt")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("stub-detect", help="replay ground truth through the stub detector")
    add_common(p)
    p.add_argument("--drop", type=float, default=0.0, help="box drop rate")
    p.add_argument("--jitter", type=float, default=0.0, help="box/confidence noise magnitude")
    p.add_argument("--flip", type=float, default=0.0, help="class flip rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for detection files")
    p.set_defaults(func=cmd_stub_detect)

    p = sub.add_parser("eval-det", help="per-class P/R/F1/AP table and mAP")
    add_common(p, detections=True)
    p.add_argument("--iou", type=float, default=0.5, help="IoU threshold (default 0.5)")
    p.add_argument("--conf", type=float, default=0.5, help="confidence threshold (default 0.5)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_det)

    p = sub.add_parser("eval-cls", help="multi-label classification metrics")
    add_common(p)
    p.add_argument("--probs", required=True, help="CSV of image_id,p0..pN-1")
    p.add_argument("--conf", type=float, default=0.5, help="probability threshold (default 0.5)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_cls)

    p = sub.add_parser("curves", help="P/R/F1 vs confidence and PR curves as CSV")
    add_common(p, detections=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("confusion", help="confusion matrix with background row/column")
    add_common(p, detections=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--conf", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_confusion)

    # serve flags fall back to PLATTERKIT_* environment variables.
    env = os.environ
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--address", default=env.get("PLATTERKIT_ADDRESS", "127.0.0.1"))
    p.add_argument("--port", type=int, default=int(env.get("PLATTERKIT_PORT", "8080")))
    p.add_argument(
        "--data-dir",
        default=env.get("PLATTERKIT_DATA_DIR"),
        required="PLATTERKIT_DATA_DIR" not in env,
    )
    p.add_argument(
        "--calorie-table",
        default=env.get("PLATTERKIT_CALORIE_TABLE"),
        required="PLATTERKIT_CALORIE_TABLE" not in env,
        help="CSV of class_id,name,kcal",
    )
    p.add_argument(
        "--conf",
        type=float,
        default=float(env.get("PLATTERKIT_CONF", "0.5")),
        help="detection confidence threshold",
    )
    p.add_argument("--snapshot-every", type=int, default=256)
    p.add_argument(
        "--ui-dir",
        default=env.get("PLATTERKIT_UI_DIR"),
        help="serve this directory (the built frontend) at /ui",
    )
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "stats" and not args.counts and not (args.classes and args.labels):
        print("error: stats needs either --counts or both --classes and --labels", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except PlatterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
