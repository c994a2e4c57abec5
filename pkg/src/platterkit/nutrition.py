"""Diet logic: BMR, calorie goals, meal estimation, daily tracker, history.

The daily budget comes from a basal metabolic rate estimate scaled by an
activity multiplier. Three published BMR formulas are available:

* ``harris1918``: 66.4730 + 13.7516 W + 5.0033 H - 6.7550 A (men),
  655.0955 + 9.5634 W + 1.8496 H - 4.6756 A (women)
* ``roza1984``: 88.362 + 13.397 W + 4.799 H - 5.677 A (men),
  447.593 + 9.247 W + 3.098 H - 4.330 A (women)
* ``mifflin1990`` (default): 10 W + 6.25 H - 5 A + 5 (men) / - 161 (women)

with W in kg, H in cm, A in years. Meals are priced from a per-dish calorie
table (kcal per detected serving; portion size is deliberately unmodeled).
The tracker sums the meals of one local day in the user's timezone, so it
resets at the user's midnight, and grades the consumed fraction of the goal
into green / yellow / orange / red nudge bands.
"""

from __future__ import annotations

import csv
import io
import math
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from zoneinfo import ZoneInfo

from typing import Iterable, Mapping, Sequence

from .detections import DetectionSet, detections_to_counts
from .errors import (
    EmptyMealError,
    FormatError,
    InvalidRangeError,
    MissingDishCaloriesError,
    NoGoalError,
    UnknownUserError,
)

__all__ = [
    "ACTIVITY_MULTIPLIERS",
    "BMR_VARIANTS",
    "DEFAULT_VARIANT",
    "DEFAULT_BAND_THRESHOLDS",
    "BAND_NAMES",
    "UserProfile",
    "CalorieGoal",
    "DishEntry",
    "CalorieTable",
    "MealLog",
    "TrackerState",
    "DayEntry",
    "compute_bmr",
    "compute_goal",
    "estimate_meal_calories",
    "band_for_fraction",
    "DietJournal",
]

ACTIVITY_MULTIPLIERS = {
    "sedentary": 1.2,
    "light": 1.375,
    "moderate": 1.55,
    "active": 1.725,
    "very_active": 1.9,
}

BMR_VARIANTS = ("harris1918", "roza1984", "mifflin1990")
DEFAULT_VARIANT = "mifflin1990"

BAND_NAMES = ("green", "yellow", "orange", "red")
DEFAULT_BAND_THRESHOLDS = (0.5, 0.75, 1.0)


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    age: float
    sex: str
    height_cm: float
    weight_kg: float
    activity: str
    timezone: str = "UTC"

    def __post_init__(self):
        if self.sex not in ("male", "female"):
            raise ValueError(f"sex must be 'male' or 'female', got {self.sex!r}")
        if not 1 <= self.age <= 130:
            raise ValueError(f"age {self.age} outside [1, 130]")
        if not 0 < self.height_cm <= 300:
            raise ValueError(f"height {self.height_cm} outside (0, 300] cm")
        if not 0 < self.weight_kg <= 500:
            raise ValueError(f"weight {self.weight_kg} outside (0, 500] kg")
        if self.activity not in ACTIVITY_MULTIPLIERS:
            raise ValueError(
                f"activity must be one of {sorted(ACTIVITY_MULTIPLIERS)}, "
                f"got {self.activity!r}"
            )
        try:
            ZoneInfo(self.timezone)
        except Exception:
            raise ValueError(f"unknown timezone {self.timezone!r}") from None

    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)


@dataclass(frozen=True)
class CalorieGoal:
    bmr: float
    multiplier: float
    goal: float
    formula_variant: str

    def __post_init__(self):
        if self.bmr <= 0 or self.multiplier <= 0 or self.goal <= 0:
            raise ValueError(
                "goal values must be positive; the profile is outside the "
                f"{self.formula_variant} formula's validity range"
            )


def compute_bmr(profile: UserProfile, variant: str = DEFAULT_VARIANT) -> float:
    """Basal metabolic rate in kcal/day for the chosen formula variant.

    This is the raw published formula; for implausible profiles it can go
    nonpositive, which compute_goal rejects.
    """
    w, h, a = profile.weight_kg, profile.height_cm, profile.age
    male = profile.sex == "male"
    if variant == "harris1918":
        if male:
            return 66.4730 + 13.7516 * w + 5.0033 * h - 6.7550 * a
        return 655.0955 + 9.5634 * w + 1.8496 * h - 4.6756 * a
    if variant == "roza1984":
        if male:
            return 88.362 + 13.397 * w + 4.799 * h - 5.677 * a
        return 447.593 + 9.247 * w + 3.098 * h - 4.330 * a
    if variant == "mifflin1990":
        return 10.0 * w + 6.25 * h - 5.0 * a + (5.0 if male else -161.0)
    raise ValueError(f"unknown BMR variant {variant!r}; expected one of {BMR_VARIANTS}")


def compute_goal(profile: UserProfile, variant: str = DEFAULT_VARIANT) -> CalorieGoal:
    """Daily calorie goal: BMR scaled by the profile's activity multiplier."""
    bmr = compute_bmr(profile, variant)
    multiplier = ACTIVITY_MULTIPLIERS[profile.activity]
    return CalorieGoal(
        bmr=bmr, multiplier=multiplier, goal=bmr * multiplier, formula_variant=variant
    )


@dataclass(frozen=True)
class DishEntry:
    class_id: int
    name: str
    kcal: float

    def __post_init__(self):
        if self.kcal <= 0:
            raise ValueError(f"kcal for {self.name!r} must be > 0, got {self.kcal}")
        if self.class_id < 0:
            raise ValueError(f"negative class id {self.class_id}")


@dataclass(frozen=True)
class CalorieTable:
    """kcal per detected serving, keyed by dish class id."""

    entries: tuple[DishEntry, ...]

    def __post_init__(self):
        index = {e.class_id: e for e in self.entries}
        if len(index) != len(self.entries):
            raise ValueError("duplicate class ids in calorie table")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.entries)

    def kcal_for(self, class_id: int) -> float:
        entry = self._index.get(class_id)
        if entry is None:
            raise MissingDishCaloriesError(class_id)
        return entry.kcal

    def name_for(self, class_id: int) -> str:
        entry = self._index.get(class_id)
        if entry is None:
            raise MissingDishCaloriesError(class_id)
        return entry.name

    def class_ids(self) -> tuple[int, ...]:
        return tuple(e.class_id for e in self.entries)

    @classmethod
    def from_csv(cls, text: str) -> "CalorieTable":
        """Parse ``class_id,name,kcal`` rows; a leading header row is skipped."""
        entries = []
        saw_row = False
        reader = csv.reader(io.StringIO(text))
        for line_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise FormatError(f"expected 3 columns, got {len(row)}", line=line_no)
            first = row[0].strip()
            if not saw_row and not first.lstrip("-").isdigit():
                saw_row = True
                continue
            saw_row = True
            try:
                class_id = int(first)
                kcal = float(row[2])
            except ValueError:
                raise FormatError(f"bad row {row!r}", line=line_no) from None
            if not math.isfinite(kcal):
                raise FormatError(f"non-finite kcal in row {row!r}", line=line_no)
            entries.append(DishEntry(class_id, row[1].strip(), kcal))
        return cls(tuple(entries))

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["class_id", "name", "kcal"])
        for entry in self.entries:
            writer.writerow([entry.class_id, entry.name, repr(entry.kcal)])
        return out.getvalue()


def estimate_meal_calories(counts: Mapping[int, int], table: CalorieTable) -> float:
    """Total kcal of a dish-count map: sum of count x per-dish kcal."""
    return float(sum(count * table.kcal_for(class_id) for class_id, count in counts.items()))


def band_for_fraction(
    fraction: float, thresholds: Sequence[float] = DEFAULT_BAND_THRESHOLDS
) -> str:
    """Nudge color for a consumed/goal fraction.

    Bands are half-open: green [0, t0), yellow [t0, t1), orange [t1, t2),
    red [t2, inf) with default cut points 0.5 / 0.75 / 1.0.
    """
    if fraction < 0:
        raise ValueError(f"fraction must be >= 0, got {fraction}")
    t0, t1, t2 = thresholds
    if not 0 < t0 < t1 < t2:
        raise ValueError(f"band thresholds must increase, got {thresholds}")
    if fraction < t0:
        return "green"
    if fraction < t1:
        return "yellow"
    if fraction < t2:
        return "orange"
    return "red"


@dataclass(frozen=True)
class MealLog:
    user_id: str
    timestamp: datetime
    counts: Mapping[int, int]
    kcal: float
    source: str = "manual"

    def __post_init__(self):
        if self.timestamp.tzinfo is None:
            raise ValueError("meal timestamps must be timezone-aware")
        if not self.counts:
            raise EmptyMealError("meal has no dishes")
        for class_id, count in self.counts.items():
            if count < 1:
                raise EmptyMealError(
                    f"count for class {class_id} must be >= 1, got {count}"
                )


@dataclass(frozen=True)
class TrackerState:
    user_id: str
    local_date: date
    consumed: float
    goal: float
    fraction: float
    band: str
    meals: tuple[MealLog, ...]


@dataclass(frozen=True)
class DayEntry:
    local_date: date
    consumed: float
    goal: float
    band: str
    meals: tuple[MealLog, ...]


@dataclass
class _UserState:
    profile: UserProfile
    goal: CalorieGoal | None = None
    meals: list[MealLog] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


class DietJournal:
    """Users, goals, and meal logs for the diet loop.

    Writes and reads for one user serialize on a per-user lock; different
    users are independent. The journal itself is plain in-memory state;
    durability is layered on top by the service's event log.
    """

    def __init__(
        self,
        table: CalorieTable,
        band_thresholds: Sequence[float] = DEFAULT_BAND_THRESHOLDS,
        default_variant: str = DEFAULT_VARIANT,
        detection_confidence_threshold: float = 0.5,
    ):
        self.table = table
        self.band_thresholds = tuple(band_thresholds)
        self.default_variant = default_variant
        self.detection_confidence_threshold = detection_confidence_threshold
        self._users: dict[str, _UserState] = {}
        self._registry_lock = threading.Lock()

    # -- users and goals ---------------------------------------------------

    def create_user(self, profile: UserProfile) -> UserProfile:
        with self._registry_lock:
            if profile.user_id in self._users:
                raise ValueError(f"user {profile.user_id!r} already exists")
            self._users[profile.user_id] = _UserState(profile)
        return profile

    def user_ids(self) -> tuple[str, ...]:
        with self._registry_lock:
            return tuple(self._users)

    def _state(self, user_id: str) -> _UserState:
        with self._registry_lock:
            state = self._users.get(user_id)
        if state is None:
            raise UnknownUserError(user_id)
        return state

    def profile(self, user_id: str) -> UserProfile:
        return self._state(user_id).profile

    def set_goal(self, user_id: str, variant: str | None = None) -> CalorieGoal:
        state = self._state(user_id)
        goal = compute_goal(state.profile, variant or self.default_variant)
        with state.lock:
            state.goal = goal
        return goal

    def set_goal_value(self, user_id: str, goal: CalorieGoal) -> CalorieGoal:
        """Install an already-computed goal (used when replaying stored state)."""
        state = self._state(user_id)
        with state.lock:
            state.goal = goal
        return goal

    def goal(self, user_id: str) -> CalorieGoal | None:
        return self._state(user_id).goal

    # -- meals -------------------------------------------------------------

    def log_meal(
        self,
        user_id: str,
        counts: Mapping[int, int] | DetectionSet,
        timestamp: datetime,
        source: str | None = None,
    ) -> MealLog:
        """Append one meal; counts can come straight from a detection set."""
        state = self._state(user_id)
        if isinstance(counts, DetectionSet):
            source = source or f"detections:{counts.image_id}"
            counts = detections_to_counts(
                counts, self.detection_confidence_threshold
            )
        if not counts:
            raise EmptyMealError("meal has no dishes")
        kcal = estimate_meal_calories(counts, self.table)
        meal = MealLog(
            user_id=user_id,
            timestamp=timestamp,
            counts=dict(counts),
            kcal=kcal,
            source=source or "manual",
        )
        with state.lock:
            state.meals.append(meal)
        return meal

    def append_meal(self, user_id: str, meal: MealLog) -> MealLog:
        """Append an already-priced meal (used when replaying stored state)."""
        state = self._state(user_id)
        with state.lock:
            state.meals.append(meal)
        return meal

    def meals(self, user_id: str) -> tuple[MealLog, ...]:
        state = self._state(user_id)
        with state.lock:
            return tuple(state.meals)

    # -- tracker and history -------------------------------------------------

    def _local_date(self, state: _UserState, instant: datetime) -> date:
        return instant.astimezone(state.profile.tzinfo()).date()

    def _day_meals(
        self, state: _UserState, day: date, meals: Iterable[MealLog]
    ) -> tuple[MealLog, ...]:
        return tuple(
            meal for meal in meals if self._local_date(state, meal.timestamp) == day
        )

    def tracker_state(self, user_id: str, now: datetime) -> TrackerState:
        """Consumed kcal, goal fraction, and nudge band for the local day of
        ``now`` in the user's timezone. The day's total is reset at the
        user's local midnight simply because the date changes."""
        if now.tzinfo is None:
            raise ValueError("'now' must be timezone-aware")
        state = self._state(user_id)
        with state.lock:
            goal = state.goal
            meals = tuple(state.meals)
        if goal is None:
            raise NoGoalError(f"user {user_id!r} has no calorie goal set")
        day = self._local_date(state, now)
        day_meals = self._day_meals(state, day, meals)
        consumed = sum(meal.kcal for meal in day_meals)
        fraction = consumed / goal.goal
        return TrackerState(
            user_id=user_id,
            local_date=day,
            consumed=consumed,
            goal=goal.goal,
            fraction=fraction,
            band=band_for_fraction(fraction, self.band_thresholds),
            meals=day_meals,
        )

    def history(
        self, user_id: str, start: date, end: date
    ) -> tuple[DayEntry, ...]:
        """One entry per local date in [start, end], chronological; days
        without meals report consumed 0."""
        if end < start:
            raise InvalidRangeError(f"range end {end} before start {start}")
        state = self._state(user_id)
        with state.lock:
            goal = state.goal
            meals = tuple(state.meals)
        if goal is None:
            raise NoGoalError(f"user {user_id!r} has no calorie goal set")
        entries = []
        day = start
        while day <= end:
            day_meals = self._day_meals(state, day, meals)
            consumed = sum(meal.kcal for meal in day_meals)
            fraction = consumed / goal.goal
            entries.append(
                DayEntry(
                    local_date=day,
                    consumed=consumed,
                    goal=goal.goal,
                    band=band_for_fraction(fraction, self.band_thresholds),
                    meals=day_meals,
                )
            )
            day = day + timedelta(days=1)
        return tuple(entries)
