"""HTTP facade and persistence for the diet loop and evaluation jobs.

Endpoints (JSON in/out, errors as ``{"error": {"code", "message"}}``):

* ``POST /users`` create a user from a profile
* ``PUT /users/{id}/goal`` compute and store the calorie goal
* ``POST /users/{id}/meals`` log a meal from dish counts or raw detection
  lines (``class_id confidence cx cy w h``)
* ``GET /users/{id}`` profile plus goal
* ``GET /users/{id}/tracker?at=`` consumed kcal, fraction, and nudge band
  for the local day of ``at`` (default: now)
* ``GET /users/{id}/history?from=&to=`` one entry per local date
* ``GET /dishes`` the calorie table
* ``POST /evaluations`` detection metrics from uploaded label/detection text
* ``GET /healthz`` liveness probe

Persistence is an append-only JSONL event log plus periodic snapshots.
Write handlers validate, append the event (flush + fsync), then apply it to
in-memory state, so an acknowledged write survives any crash and a restart
replays to the identical state. Events store fully resolved values (kcal
priced at log time), which keeps replay exact even if the calorie table is
edited later. ``request_id`` on POST bodies makes retries idempotent: a
replayed id returns the originally acknowledged response.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .dataset import parse_class_list, parse_yolo_label_file
from .detections import detections_to_counts, parse_detection_file
from .errors import EmptyMealError, FormatError, PlatterError
from .metrics import MetricsReport, evaluate_detections
from .nutrition import (
    DEFAULT_BAND_THRESHOLDS,
    DEFAULT_VARIANT,
    CalorieGoal,
    CalorieTable,
    DietJournal,
    MealLog,
    UserProfile,
    compute_goal,
    estimate_meal_calories,
)

__all__ = ["ServiceConfig", "EventLog", "ServiceState", "create_app"]

_HTTP_STATUS_BY_CODE = {
    "unknown_user": 404,
    "no_goal": 409,
    "missing_dish_calories": 422,
    "invalid_range": 422,
    "empty_meal": 422,
    "no_evaluable_classes": 422,
}


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    calorie_table: CalorieTable
    confidence_threshold: float = 0.5
    band_thresholds: tuple[float, float, float] = DEFAULT_BAND_THRESHOLDS
    default_variant: str = DEFAULT_VARIANT
    snapshot_every: int = 256
    evaluation_workers: int = 2
    ui_dir: Path | None = None


class EventLog:
    """Append-only JSONL event log with monotone sequence numbers."""

    def __init__(self, path: Path, start_seq: int = 0):
        self.path = path
        self._seq = start_seq
        self._lock = threading.Lock()
        self._fh = open(path, "a", encoding="utf-8")

    @staticmethod
    def read_events(path: Path) -> list[dict]:
        """Read back the log, tolerating a torn final line.

        Appends are flushed and fsynced before acknowledgement, so only the
        very last record can be half-written (a crash mid-append of an
        unacknowledged event); that tail is dropped. A malformed line with
        records after it means real corruption and raises.
        """
        if not path.exists():
            return []
        lines = [
            line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()
        ]
        events = []
        for index, line in enumerate(lines):
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError:
                if index == len(lines) - 1:
                    break
                raise ValueError(f"corrupt event log {path} at line {index + 1}")
        return events

    def append(self, kind: str, payload: Mapping[str, Any]) -> dict:
        with self._lock:
            self._seq += 1
            event = {
                "seq": self._seq,
                "kind": kind,
                "at": datetime.now(timezone.utc).isoformat(),
                "payload": dict(payload),
            }
            self._fh.write(json.dumps(event, separators=(",", ":")) + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            return event

    def close(self):
        self._fh.close()


def _meal_payload(meal: MealLog) -> dict:
    return {
        "user_id": meal.user_id,
        "timestamp": meal.timestamp.isoformat(),
        "counts": {str(k): v for k, v in meal.counts.items()},
        "kcal": meal.kcal,
        "source": meal.source,
    }


def _goal_payload(user_id: str, goal: CalorieGoal) -> dict:
    return {
        "user_id": user_id,
        "bmr": goal.bmr,
        "multiplier": goal.multiplier,
        "goal": goal.goal,
        "formula_variant": goal.formula_variant,
    }


def _profile_payload(profile: UserProfile) -> dict:
    return {
        "user_id": profile.user_id,
        "age": profile.age,
        "sex": profile.sex,
        "height_cm": profile.height_cm,
        "weight_kg": profile.weight_kg,
        "activity": profile.activity,
        "timezone": profile.timezone,
    }


class ServiceState:
    """In-memory state rebuilt by applying events in sequence order."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.journal = DietJournal(
            config.calorie_table,
            band_thresholds=config.band_thresholds,
            default_variant=config.default_variant,
            detection_confidence_threshold=config.confidence_threshold,
        )
        self.request_cache: dict[str, dict] = {}

    def apply(self, event: Mapping[str, Any]) -> dict:
        kind = event["kind"]
        payload = event["payload"]
        if kind == "user_created":
            profile = UserProfile(
                user_id=payload["user_id"],
                age=payload["age"],
                sex=payload["sex"],
                height_cm=payload["height_cm"],
                weight_kg=payload["weight_kg"],
                activity=payload["activity"],
                timezone=payload["timezone"],
            )
            self.journal.create_user(profile)
            response = _profile_payload(profile)
        elif kind == "goal_set":
            goal = CalorieGoal(
                bmr=payload["bmr"],
                multiplier=payload["multiplier"],
                goal=payload["goal"],
                formula_variant=payload["formula_variant"],
            )
            self.journal.set_goal_value(payload["user_id"], goal)
            response = _goal_payload(payload["user_id"], goal)
        elif kind == "meal_logged":
            meal = MealLog(
                user_id=payload["user_id"],
                timestamp=datetime.fromisoformat(payload["timestamp"]),
                counts={int(k): v for k, v in payload["counts"].items()},
                kcal=payload["kcal"],
                source=payload["source"],
            )
            self.journal.append_meal(payload["user_id"], meal)
            response = _meal_payload(meal)
        else:
            raise ValueError(f"unknown event kind {kind!r}")
        request_id = payload.get("request_id")
        if request_id:
            self.request_cache[request_id] = response
        return response

    # -- snapshotting --------------------------------------------------------

    def to_snapshot(self, seq: int) -> dict:
        users = []
        for user_id in self.journal.user_ids():
            profile = self.journal.profile(user_id)
            goal = self.journal.goal(user_id)
            users.append(
                {
                    "profile": _profile_payload(profile),
                    "goal": _goal_payload(user_id, goal) if goal else None,
                    "meals": [_meal_payload(m) for m in self.journal.meals(user_id)],
                }
            )
        return {"seq": seq, "users": users, "request_cache": self.request_cache}

    def load_snapshot(self, snapshot: Mapping[str, Any]) -> int:
        for entry in snapshot["users"]:
            p = entry["profile"]
            self.journal.create_user(UserProfile(**p))
            if entry["goal"]:
                g = entry["goal"]
                self.journal.set_goal_value(
                    p["user_id"],
                    CalorieGoal(
                        bmr=g["bmr"],
                        multiplier=g["multiplier"],
                        goal=g["goal"],
                        formula_variant=g["formula_variant"],
                    ),
                )
            for m in entry["meals"]:
                self.journal.append_meal(
                    p["user_id"],
                    MealLog(
                        user_id=m["user_id"],
                        timestamp=datetime.fromisoformat(m["timestamp"]),
                        counts={int(k): v for k, v in m["counts"].items()},
                        kcal=m["kcal"],
                        source=m["source"],
                    ),
                )
        self.request_cache.update(snapshot.get("request_cache", {}))
        return int(snapshot["seq"])


class ProfileIn(BaseModel):
    age: float
    sex: str
    height_cm: float
    weight_kg: float
    activity: str
    timezone: str = "UTC"
    request_id: str | None = None


class GoalIn(BaseModel):
    variant: str | None = None


class MealIn(BaseModel):
    counts: dict[int, int] | None = None
    detections: str | None = None
    image_id: str = "upload"
    timestamp: datetime | None = None
    source: str | None = None
    request_id: str | None = None


class EvaluationIn(BaseModel):
    classes: list[str]
    ground_truth: dict[str, str]
    detections: dict[str, str]
    iou_threshold: float = 0.5
    confidence_threshold: float = 0.5
    include_confusion: bool = False


def _registry_from_table(table: CalorieTable):
    ids = sorted(table.class_ids())
    if ids != list(range(len(ids))) or not ids:
        return None
    names = [table.name_for(class_id) for class_id in ids]
    return parse_class_list("\n".join(names))


def _report_payload(report: MetricsReport) -> dict:
    return {
        "task": report.task,
        "iou_threshold": report.iou_threshold,
        "confidence_threshold": report.confidence_threshold,
        "ap_mode": report.ap_mode,
        "per_class": [
            {
                "class_id": c.class_id,
                "name": c.name,
                "num_ground_truth": c.num_ground_truth,
                "precision": c.precision,
                "recall": c.recall,
                "f1": c.f1,
                "ap": c.ap,
            }
            for c in report.per_class
        ],
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "mean_ap": report.mean_ap,
        "evaluated_classes": list(report.evaluated_classes),
        "skipped_classes": list(report.skipped_classes),
    }


def create_app(config: ServiceConfig) -> FastAPI:
    """Build the service: load snapshot, replay the event tail, serve."""
    config.data_dir.mkdir(parents=True, exist_ok=True)
    events_path = config.data_dir / "events.jsonl"
    snapshot_path = config.data_dir / "snapshot.json"

    state = ServiceState(config)
    last_seq = 0
    if snapshot_path.exists():
        last_seq = state.load_snapshot(json.loads(snapshot_path.read_text()))
    for event in EventLog.read_events(events_path):
        if event["seq"] > last_seq:
            state.apply(event)
            last_seq = event["seq"]

    log = EventLog(events_path, start_seq=last_seq)
    registry = _registry_from_table(config.calorie_table)
    write_lock = threading.Lock()
    writes_since_snapshot = 0

    app = FastAPI(title="platterkit service", version="0.1.0")
    app.state.service_state = state
    app.state.event_log = log
    executor = ThreadPoolExecutor(max_workers=config.evaluation_workers)

    @app.exception_handler(PlatterError)
    async def platter_error_handler(request: Request, exc: PlatterError):
        status = _HTTP_STATUS_BY_CODE.get(exc.code, 422)
        return JSONResponse(
            status_code=status,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "validation_error", "message": str(exc)}},
        )

    def commit(kind: str, payload: dict) -> dict:
        nonlocal writes_since_snapshot
        with write_lock:
            event = log.append(kind, payload)
            response = state.apply(event)
            writes_since_snapshot += 1
            if writes_since_snapshot >= config.snapshot_every:
                tmp = snapshot_path.with_suffix(".tmp")
                tmp.write_text(json.dumps(state.to_snapshot(event["seq"])))
                os.replace(tmp, snapshot_path)
                writes_since_snapshot = 0
        return response

    def cached_response(request_id: str | None) -> dict | None:
        if request_id:
            return state.request_cache.get(request_id)
        return None

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/users", status_code=201)
    def create_user(body: ProfileIn):
        cached = cached_response(body.request_id)
        if cached is not None:
            return cached
        user_id = uuid.uuid4().hex[:12]
        # Constructing the profile runs all invariant checks up front.
        UserProfile(
            user_id=user_id,
            age=body.age,
            sex=body.sex,
            height_cm=body.height_cm,
            weight_kg=body.weight_kg,
            activity=body.activity,
            timezone=body.timezone,
        )
        return commit(
            "user_created",
            {
                "user_id": user_id,
                "age": body.age,
                "sex": body.sex,
                "height_cm": body.height_cm,
                "weight_kg": body.weight_kg,
                "activity": body.activity,
                "timezone": body.timezone,
                "request_id": body.request_id,
            },
        )

    @app.get("/users/{user_id}")
    def get_user(user_id: str):
        profile = state.journal.profile(user_id)
        goal = state.journal.goal(user_id)
        return {
            "profile": _profile_payload(profile),
            "goal": _goal_payload(user_id, goal) if goal else None,
        }

    @app.put("/users/{user_id}/goal")
    def set_goal(user_id: str, body: GoalIn):
        profile = state.journal.profile(user_id)
        goal = compute_goal(profile, body.variant or config.default_variant)
        return commit("goal_set", _goal_payload(user_id, goal))

    @app.post("/users/{user_id}/meals", status_code=201)
    def post_meal(user_id: str, body: MealIn):
        cached = cached_response(body.request_id)
        if cached is not None:
            return cached
        state.journal.profile(user_id)  # 404 for unknown users
        if (body.counts is None) == (body.detections is None):
            raise ValueError("provide exactly one of 'counts' or 'detections'")
        if body.detections is not None:
            if registry is None:
                raise FormatError(
                    "detection uploads need a calorie table with contiguous ids"
                )
            detection_set = parse_detection_file(
                body.image_id, body.detections, registry
            )
            counts = detections_to_counts(
                detection_set, config.confidence_threshold
            )
            source = body.source or f"detections:{body.image_id}"
        else:
            counts = dict(body.counts)
            source = body.source or "manual"
        if not counts:
            raise EmptyMealError("meal has no dishes")
        timestamp = body.timestamp or datetime.now(timezone.utc)
        if timestamp.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware")
        # Price the meal now; the event stores the resolved value.
        meal = MealLog(
            user_id=user_id,
            timestamp=timestamp,
            counts=counts,
            kcal=estimate_meal_calories(counts, config.calorie_table),
            source=source,
        )
        payload = _meal_payload(meal)
        payload["request_id"] = body.request_id
        return commit("meal_logged", payload)

    @app.get("/users/{user_id}/tracker")
    def get_tracker(user_id: str, at: datetime | None = None):
        instant = at or datetime.now(timezone.utc)
        if instant.tzinfo is None:
            raise ValueError("'at' must be timezone-aware")
        tracker = state.journal.tracker_state(user_id, instant)
        return {
            "user_id": tracker.user_id,
            "date": tracker.local_date.isoformat(),
            "consumed": tracker.consumed,
            "goal": tracker.goal,
            "fraction": tracker.fraction,
            "band": tracker.band,
            "meals": [_meal_payload(m) for m in tracker.meals],
        }

    @app.get("/users/{user_id}/history")
    def get_history(
        user_id: str,
        from_: date = Query(alias="from"),
        to: date = Query(),
    ):
        days = state.journal.history(user_id, from_, to)
        return {
            "user_id": user_id,
            "days": [
                {
                    "date": day.local_date.isoformat(),
                    "consumed": day.consumed,
                    "goal": day.goal,
                    "band": day.band,
                    "meals": [_meal_payload(m) for m in day.meals],
                }
                for day in days
            ],
        }

    @app.get("/dishes")
    def get_dishes():
        return {
            "dishes": [
                {"class_id": e.class_id, "name": e.name, "kcal": e.kcal}
                for e in config.calorie_table.entries
            ],
            "confidence_threshold": config.confidence_threshold,
        }

    @app.post("/evaluations")
    def post_evaluation(body: EvaluationIn):
        def run() -> dict:
            registry = parse_class_list("\n".join(body.classes))
            gt_by_image = {}
            for image_id, text in body.ground_truth.items():
                record = parse_yolo_label_file(image_id, text, registry)
                gt_by_image[image_id] = list(record.boxes)
            preds_by_image = {}
            for image_id, text in body.detections.items():
                detection_set = parse_detection_file(image_id, text, registry)
                preds_by_image[image_id] = list(detection_set.predictions)
            report = evaluate_detections(
                gt_by_image,
                preds_by_image,
                num_classes=len(registry),
                class_names=list(registry.names),
                iou_threshold=body.iou_threshold,
                confidence_threshold=body.confidence_threshold,
                include_confusion=body.include_confusion,
            )
            payload = _report_payload(report)
            if report.confusion is not None:
                payload["confusion"] = report.confusion.to_lists()
            return payload

        # Evaluation runs on its own bounded pool so a heavy job cannot
        # starve tracker reads.
        future = executor.submit(run)
        return future.result()

    if config.ui_dir is not None:
        from starlette.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
