"""Acceptance suite: one test per primary criterion, at stated tolerances.

Run with ``pytest -s tests/test_acceptance.py -v`` to see the per-criterion
pass lines alongside pytest's own verdicts.
"""

import csv
import math
import random
import subprocess
import sys
import time
from datetime import datetime
from zoneinfo import ZoneInfo

import numpy as np
import pytest
from fastapi.testclient import TestClient

from platterkit import (
    BoundingBox,
    CalorieTable,
    ClassRegistry,
    Dataset,
    DetectionSet,
    DishEntry,
    GroundTruthBox,
    ImageRecord,
    MatchOutcome,
    PredictedBox,
    UserProfile,
    average_precision,
    band_for_fraction,
    compute_bmr,
    compute_goal,
    iou,
    match_detections,
    parse_class_list,
    parse_detection_file,
    parse_yolo_label_file,
    precision_recall_f1,
    serialize_detection_file,
    serialize_yolo_label,
    split_dataset,
    stats_from_counts,
)
from platterkit.errors import FormatError, PlatterError
from platterkit.service import ServiceConfig, create_app

from conftest import DATA_DIR, write_random_dataset
from oracles import ap_threshold_sweep, make_random_instance


def report(name: str):
    print(f"[acceptance] {name}: PASS")


def test_dataset_stats_reference_counts():
    """Per-class counts reproduce the published 1115+-500 / 2210+-1584 and
    the 134,814 annotation total (within 1%), in under a second."""
    started = time.perf_counter()
    rows = list(csv.reader((DATA_DIR / "dish_class_counts.csv").open()))[1:]
    image_counts = [int(r[2]) for r in rows]
    ann_counts = [int(r[3]) for r in rows]
    assert len(rows) == 61
    stats = stats_from_counts(image_counts, ann_counts, total_images=sum(image_counts))
    elapsed = time.perf_counter() - started

    assert abs(round(stats.image_mean) - 1115) <= 1
    assert abs(round(stats.image_std) - 500) <= 1
    assert abs(round(stats.annotation_mean) - 2210) <= 1
    assert abs(round(stats.annotation_std) - 1584) <= 1
    assert abs(stats.total_annotations - 134814) <= 0.01 * 134814
    # No discrepancy to report: the column sums match the published totals
    # exactly (annotations 134,814; image column sum 68,005).
    assert stats.total_annotations == 134814
    assert sum(stats.per_class_image_count) == 68005
    assert elapsed < 1.0
    report(
        "dataset stats (1115+-500, 2210+-1584, total 134814, "
        f"{elapsed * 1000:.0f} ms)"
    )


def test_ap_oracle_equivalence():
    """average_precision equals a brute-force every-threshold sweep with
    envelope integration, |delta| <= 1e-9, on 1000 random instances."""
    started = time.perf_counter()
    rng = np.random.default_rng(20260809)
    checked = 0
    worst = 0.0
    for _ in range(1000):
        num_classes, gt_by_image, preds_by_image = make_random_instance(rng)
        for class_id in range(num_classes):
            ap = average_precision(gt_by_image, preds_by_image, class_id, 0.5)
            oracle = ap_threshold_sweep(gt_by_image, preds_by_image, class_id, 0.5, iou)
            if ap is None:
                assert oracle is None
                continue
            delta = abs(ap - oracle)
            worst = max(worst, delta)
            assert delta <= 1e-9
            checked += 1
    elapsed = time.perf_counter() - started
    assert checked >= 1000
    assert elapsed < 60.0
    report(
        f"AP oracle equivalence ({checked} class instances, worst |delta| "
        f"{worst:.2e}, {elapsed:.1f} s)"
    )


def test_perfect_detector_end_to_end(tmp_path):
    """Zero-noise stub detections, written to files and scored through the
    CLI, give P = R = F1 = 100.00 and mAP = 100.00 exactly."""
    rng = np.random.default_rng(7)
    classes_path, labels_dir = write_random_dataset(
        tmp_path, rng, num_classes=5, num_images=12
    )
    detections_dir = tmp_path / "dets"

    def run_cli(*argv):
        return subprocess.run(
            [sys.executable, "-m", "platterkit", *argv],
            capture_output=True,
            text=True,
            check=False,
        )

    stub = run_cli(
        "stub-detect",
        "--classes", str(classes_path),
        "--labels", str(labels_dir),
        "--out", str(detections_dir),
        "--seed", "0",
    )
    assert stub.returncode == 0, stub.stderr
    evaluated = run_cli(
        "eval-det",
        "--classes", str(classes_path),
        "--labels", str(labels_dir),
        "--detections", str(detections_dir),
    )
    assert evaluated.returncode == 0, evaluated.stderr
    lines = evaluated.stdout.splitlines()
    per_class = [line.split(",") for line in lines if line and line[0].isdigit()]
    for row in per_class:
        if int(row[2]) > 0:  # classes with ground truth
            assert row[3] == "100.00" and row[4] == "100.00" and row[5] == "100.00"
            assert row[6] == "100.00"
    assert "summary,macro_precision,100.00" in lines
    assert "summary,macro_recall,100.00" in lines
    assert "summary,macro_f1,100.00" in lines
    assert "summary,mAP,100.00" in lines
    report("perfect-detector end to end (files -> CLI eval-det, mAP 100.00)")


def test_matching_invariants():
    """TP+FN = |GT| and TP+FP = |kept| per class; TP never increases in
    either threshold; duplicate hits on one GT count as FP."""
    rng = np.random.default_rng(555)
    for _ in range(200):
        _, gt_by_image, preds_by_image = make_random_instance(rng)
        truths = [t for ts in gt_by_image.values() for t in ts]
        preds = [p for ps in preds_by_image.values() for p in ps]
        previous_tp = None
        for conf_thr in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
            outcome = match_detections(truths, preds, 0.5, conf_thr)
            gt_per_class = {}
            for t in truths:
                gt_per_class[t.class_id] = gt_per_class.get(t.class_id, 0) + 1
            kept_per_class = {}
            for p in preds:
                if p.confidence >= conf_thr:
                    kept_per_class[p.class_id] = kept_per_class.get(p.class_id, 0) + 1
            for class_id, total in gt_per_class.items():
                assert outcome.tp.get(class_id, 0) + outcome.fn.get(class_id, 0) == total
            for class_id, total in kept_per_class.items():
                assert outcome.tp.get(class_id, 0) + outcome.fp.get(class_id, 0) == total
            tp_total = outcome.totals()[0]
            if previous_tp is not None:
                assert tp_total <= previous_tp
            previous_tp = tp_total
        previous_tp = None
        for iou_thr in (0.05, 0.25, 0.5, 0.75, 0.95):
            tp_total = match_detections(truths, preds, iou_thr, 0.0).totals()[0]
            if previous_tp is not None:
                assert tp_total <= previous_tp
            previous_tp = tp_total

    # Duplicate rule, by hand: two identical predictions over one truth.
    box = BoundingBox(0.5, 0.5, 0.2, 0.2)
    twin = PredictedBox(0, 0.9, box)
    outcome = match_detections([GroundTruthBox(0, box)], [twin, twin])
    assert outcome.tp == {0: 1} and outcome.fp == {0: 1} and outcome.fn == {}
    report("matching invariants (counts, threshold monotonicity, duplicates)")


def test_precision_recall_f1_hand_cases():
    """(TP,FP,FN) = (3,1,2) -> P 0.75, R 0.6, F1 0.6667 (tol 1e-4); 0/0 -> 0."""
    per_class, macro = precision_recall_f1(MatchOutcome({0: 3}, {0: 1}, {0: 2}, (), 0.5, 0.5))
    assert abs(per_class[0].precision - 0.75) <= 1e-4
    assert abs(per_class[0].recall - 0.6) <= 1e-4
    assert abs(per_class[0].f1 - 0.6667) <= 1e-4
    zero, zero_macro = precision_recall_f1(MatchOutcome({0: 0}, {0: 0}, {0: 0}, (), 0.5, 0.5))
    assert (zero[0].precision, zero[0].recall, zero[0].f1) == (0.0, 0.0, 0.0)
    assert (zero_macro.precision, zero_macro.recall, zero_macro.f1) == (0.0, 0.0, 0.0)
    report("Eq. hand cases ((3,1,2) -> 0.75/0.60/0.6667, 0/0 -> 0)")


def test_iou_geometry():
    """Hand case 1/7 to 1e-9; symmetry and identity over 10^4 random pairs."""
    a = BoundingBox(1 / 3, 1 / 3, 2 / 3, 2 / 3)
    b = BoundingBox(2 / 3, 2 / 3, 2 / 3, 2 / 3)
    assert abs(iou(a, b) - 1 / 7) <= 1e-9

    rng = np.random.default_rng(2)
    for _ in range(10_000):
        cx, cy, cx2, cy2 = rng.random(4)
        w, h, w2, h2 = rng.uniform(1e-6, 1.0, size=4)
        first = BoundingBox(float(cx), float(cy), float(w), float(h))
        second = BoundingBox(float(cx2), float(cy2), float(w2), float(h2))
        v = iou(first, second)
        assert iou(second, first) == v
        assert 0.0 <= v <= 1.0
        assert iou(first, first) == 1.0
    report("IoU geometry (1/7 hand case, 10^4 symmetry/identity pairs)")


def _random_coordinate(rng) -> float:
    choice = rng.random()
    if choice < 0.1:
        return 0.0
    if choice < 0.2:
        return 1.0
    return float(rng.random())


def _random_size(rng) -> float:
    choice = rng.random()
    if choice < 0.1:
        return 1.0
    if choice < 0.2:
        return 1e-9
    return float(rng.uniform(1e-6, 1.0))


def test_parsers_roundtrip_and_reject_and_fuzz():
    """Round-trip identity on 10^4 random records; malformed fixtures are
    rejected with line numbers; 10^5 fuzz inputs never crash."""
    registry = ClassRegistry(tuple(f"c{i}" for i in range(61)))
    rng = np.random.default_rng(3)

    for _ in range(10_000):
        n_boxes = int(rng.integers(0, 4))
        gt_boxes = []
        preds = []
        for _ in range(n_boxes):
            box = BoundingBox(
                _random_coordinate(rng),
                _random_coordinate(rng),
                _random_size(rng),
                _random_size(rng),
            )
            class_id = int(rng.integers(61))
            gt_boxes.append(GroundTruthBox(class_id, box))
            preds.append(PredictedBox(class_id, float(rng.random()), box))
        record = ImageRecord("img", tuple(gt_boxes))
        assert (
            parse_yolo_label_file("img", serialize_yolo_label(record), registry).boxes
            == record.boxes
        )
        detections = DetectionSet("img", tuple(preds))
        assert (
            parse_detection_file(
                "img", serialize_detection_file(detections), registry
            ).predictions
            == detections.predictions
        )

    label_rejects = [
        ("x 0.5 0.5 0.2 0.2", "line 1"),
        ("0 0.5 0.5 0.2", "line 1"),
        ("0 0.5 0.5 0.2 0.2 0.9", "line 1"),
        ("61 0.5 0.5 0.2 0.2", "line 1"),
        ("-1 0.5 0.5 0.2 0.2", "line 1"),
        ("0 1.5 0.5 0.2 0.2", "line 1"),
        ("0 0.5 0.5 0.0 0.2", "line 1"),
        ("0 0.5 0.5 1.5 0.2", "line 1"),
        ("0 inf 0.5 0.2 0.2", "line 1"),
        ("0 0.5 0.5 0.2 0.2\n0 nan 0.5 0.2 0.2", "line 2"),
        ("2.0 0.5 0.5 0.2 0.2", "line 1"),
    ]
    for text, location in label_rejects:
        with pytest.raises(FormatError) as err:
            parse_yolo_label_file("img", text, registry)
        assert location in str(err.value)

    detection_rejects = [
        ("0 1.5 0.5 0.5 0.2 0.2", "line 1"),
        ("0 -0.1 0.5 0.5 0.2 0.2", "line 1"),
        ("0 0.9 0.5 0.5 0.2", "line 1"),
        ("0 0.9 0.5 0.5 0.2 0.2 7", "line 1"),
        ("61 0.9 0.5 0.5 0.2 0.2", "line 1"),
        ("0 0.9 0.5 0.5 0.2 0.2\nq 0.9 0.5 0.5 0.2 0.2", "line 2"),
    ]
    for text, location in detection_rejects:
        with pytest.raises(FormatError) as err:
            parse_detection_file("img", text, registry)
        assert location in str(err.value)

    token_pool = ["0", "61", "-3", "0.5", "1.5", "nan", "inf", "x", "", "\x00", "𝕊", "1e-3"]
    fuzz_rng = random.Random(11)
    crashes = 0
    for case in range(100_000):
        if case % 2 == 0:
            raw = bytes(fuzz_rng.randrange(256) for _ in range(fuzz_rng.randrange(40)))
            text = raw.decode("latin-1")
        else:
            lines = [
                " ".join(fuzz_rng.choices(token_pool, k=fuzz_rng.randrange(9)))
                for _ in range(fuzz_rng.randrange(3))
            ]
            text = "\n".join(lines)
        for parser in (parse_yolo_label_file, parse_detection_file):
            try:
                parser("img", text, registry)
            except PlatterError:
                pass
            except Exception:  # pragma: no cover - the assertion below reports
                crashes += 1
    assert crashes == 0
    report("parsers (10^4 round-trips, rejects with line numbers, 10^5 fuzz)")


def test_bmr_hand_checks_and_monotonicity():
    """Published-coefficient hand values (tol 0.01), exact goal product,
    and monotonicity over 10^3 random profiles."""
    reference = UserProfile(
        user_id="u", age=30, sex="male", height_cm=175, weight_kg=70,
        activity="moderate",
    )
    assert abs(compute_bmr(reference, "roza1984") - 1695.667) <= 0.01
    assert abs(compute_bmr(reference, "mifflin1990") - 1648.75) <= 0.01

    rng = np.random.default_rng(8)
    activities = ("sedentary", "light", "moderate", "active", "very_active")
    for index in range(1000):
        # Plausible adult ranges: the published formulas go nonpositive for
        # absurd bodies, and compute_goal rejects those outright.
        profile = UserProfile(
            user_id=f"u{index}",
            age=float(rng.uniform(18, 90)),
            sex="male" if rng.random() < 0.5 else "female",
            height_cm=float(rng.uniform(120, 220)),
            weight_kg=float(rng.uniform(35, 200)),
            activity=activities[int(rng.integers(5))],
        )
        for variant in ("harris1918", "roza1984", "mifflin1990"):
            base = compute_bmr(profile, variant)
            goal = compute_goal(profile, variant)
            assert goal.goal == goal.bmr * goal.multiplier
            heavier = UserProfile(**{**profile.__dict__, "weight_kg": profile.weight_kg + 5})
            taller = UserProfile(**{**profile.__dict__, "height_cm": profile.height_cm + 5})
            older = UserProfile(**{**profile.__dict__, "age": profile.age + 5})
            assert compute_bmr(heavier, variant) > base
            assert compute_bmr(taller, variant) > base
            assert compute_bmr(older, variant) < base
    report("BMR (roza 1695.667, mifflin 1648.75, exact goal, 10^3 monotone)")


def test_tracker_semantics(tmp_path):
    """Midnight boundary, log-order invariance, band cut points, and
    restart replay identity through the service."""
    table = CalorieTable((DishEntry(0, "samosa", 250.0), DishEntry(1, "jalebi", 150.0)))
    config = ServiceConfig(data_dir=tmp_path / "state", calorie_table=table)
    client = TestClient(create_app(config))
    created = client.post(
        "/users",
        json={
            "age": 30, "sex": "male", "height_cm": 175, "weight_kg": 70,
            "activity": "moderate", "timezone": "Asia/Kolkata",
        },
    )
    user_id = created.json()["user_id"]
    client.put(f"/users/{user_id}/goal", json={})

    client.post(
        f"/users/{user_id}/meals",
        json={"counts": {"0": 1}, "timestamp": "2026-08-01T23:59:00+05:30"},
    )
    client.post(
        f"/users/{user_id}/meals",
        json={"counts": {"1": 1}, "timestamp": "2026-08-02T00:01:00+05:30"},
    )
    first = client.get(
        f"/users/{user_id}/tracker", params={"at": "2026-08-01T23:59:30+05:30"}
    ).json()
    second = client.get(
        f"/users/{user_id}/tracker", params={"at": "2026-08-02T00:02:00+05:30"}
    ).json()
    assert first["date"] == "2026-08-01" and first["consumed"] == 250.0
    assert second["date"] == "2026-08-02" and second["consumed"] == 150.0

    # Same-day totals do not depend on the order meals were logged.
    from platterkit import DietJournal

    stamps = [
        datetime(2026, 8, 1, hour, 0, tzinfo=ZoneInfo("Asia/Kolkata"))
        for hour in (8, 13, 20)
    ]
    totals = set()
    for order in ([0, 1, 2], [2, 0, 1], [1, 2, 0]):
        journal = DietJournal(table)
        journal.create_user(
            UserProfile(
                user_id="u", age=30, sex="male", height_cm=175, weight_kg=70,
                activity="moderate", timezone="Asia/Kolkata",
            )
        )
        journal.set_goal("u")
        for k in order:
            journal.log_meal("u", {0: 1}, stamps[k])
        totals.add(
            journal.tracker_state(
                "u", datetime(2026, 8, 1, 23, 0, tzinfo=ZoneInfo("Asia/Kolkata"))
            ).consumed
        )
    assert totals == {750.0}

    # Band thresholds are closed exactly as declared.
    assert band_for_fraction(0.5 - 1e-9) == "green"
    assert band_for_fraction(0.5) == "yellow"
    assert band_for_fraction(0.75 - 1e-9) == "yellow"
    assert band_for_fraction(0.75) == "orange"
    assert band_for_fraction(1.0 - 1e-9) == "orange"
    assert band_for_fraction(1.0) == "red"

    # Restart: replaying the event log reproduces the identical history.
    params = {"from": "2026-08-01", "to": "2026-08-03"}
    before = client.get(f"/users/{user_id}/history", params=params).json()
    reopened = TestClient(create_app(config))
    after = reopened.get(f"/users/{user_id}/history", params=params).json()
    assert after == before
    report("tracker semantics (midnight, order, bands, restart replay)")


def test_split_90_10_over_100_random_datasets():
    """Sizes follow the declared rounding rule exactly; partitions are
    disjoint, exhaustive, and seed-deterministic on 100 random datasets."""
    rng = np.random.default_rng(4)
    registry = parse_class_list("a\nb\n")
    box = BoundingBox(0.5, 0.5, 0.2, 0.2)
    for case in range(100):
        n = int(rng.integers(1, 200))
        images = tuple(
            ImageRecord(f"img{i}", (GroundTruthBox(int(rng.integers(2)), box),))
            for i in range(n)
        )
        dataset = Dataset(registry, images)
        seed = int(rng.integers(0, 2**31))
        fraction = 0.9 if case < 50 else float(rng.uniform(0.05, 0.95))
        train, test = split_dataset(dataset, fraction, seed)
        again = split_dataset(dataset, fraction, seed)
        assert [r.image_id for r in train.images] == [r.image_id for r in again[0].images]
        assert [r.image_id for r in test.images] == [r.image_id for r in again[1].images]
        assert len(train) == int(math.floor(fraction * n + 0.5))
        train_ids = {r.image_id for r in train.images}
        test_ids = {r.image_id for r in test.images}
        assert not train_ids & test_ids
        assert train_ids | test_ids == {r.image_id for r in images}
    report("90:10 split (exact sizes, disjoint/exhaustive, deterministic)")
