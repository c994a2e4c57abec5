"""One simulated day of diet tracking.

Profile -> BMR (three published formulas) -> activity-scaled calorie goal ->
meals logged by hand and from detector output -> the color-graded tracker
climbing through green / yellow / orange / red -> a week of history.

Run: python demos/03_diet_day.py
"""

from datetime import date, datetime
from zoneinfo import ZoneInfo

from platterkit import (
    BoundingBox,
    CalorieTable,
    DetectionSet,
    DietJournal,
    DishEntry,
    PredictedBox,
    UserProfile,
    compute_bmr,
)

TZ = ZoneInfo("Asia/Kolkata")


def at(day: int, hour: int, minute: int = 0) -> datetime:
    return datetime(2026, 8, day, hour, minute, tzinfo=TZ)


# ── Profile and goal ─────────────────────────────────────────────────────────
profile = UserProfile(
    user_id="asha",
    age=30,
    sex="female",
    height_cm=162,
    weight_kg=58,
    activity="moderate",
    timezone="Asia/Kolkata",
)

print("BMR by formula variant (kcal/day):")
for variant in ("harris1918", "roza1984", "mifflin1990"):
    print(f"  {variant:<12} {compute_bmr(profile, variant):8.1f}")

table = CalorieTable(
    (
        DishEntry(0, "samosa", 250.0),
        DishEntry(1, "jalebi", 150.0),
        DishEntry(2, "dal", 180.0),
        DishEntry(3, "idli", 120.0),
    )
)

journal = DietJournal(table)
journal.create_user(profile)
goal = journal.set_goal("asha")  # default: mifflin1990
print(f"\ngoal = BMR {goal.bmr:.1f} x {goal.multiplier} (moderate) "
      f"= {goal.goal:.1f} kcal/day")

# ── Meals through the day ────────────────────────────────────────────────────
meals = [
    ("breakfast, logged by hand", {3: 3}, at(1, 8)),
    ("lunch, logged by hand", {2: 2, 0: 1}, at(1, 13)),
]
for label, counts, when in meals:
    meal = journal.log_meal("asha", counts, when)
    state = journal.tracker_state("asha", when)
    print(f"\n{label}: {meal.kcal:.0f} kcal")
    print(f"  tracker: {state.consumed:.0f}/{state.goal:.0f} "
          f"({state.fraction:.0%}) -> {state.band}")

# Dinner comes from a platter photo: the detector counted the dishes.
detections = DetectionSet(
    "dinner_platter",
    (
        PredictedBox(0, 0.97, BoundingBox(0.3, 0.4, 0.2, 0.2)),
        PredictedBox(0, 0.91, BoundingBox(0.6, 0.4, 0.2, 0.2)),
        PredictedBox(1, 0.88, BoundingBox(0.4, 0.7, 0.15, 0.15)),
        PredictedBox(1, 0.87, BoundingBox(0.6, 0.7, 0.15, 0.15)),
        PredictedBox(1, 0.85, BoundingBox(0.8, 0.7, 0.15, 0.15)),
        PredictedBox(2, 0.35, BoundingBox(0.5, 0.5, 0.1, 0.1)),  # below threshold
    ),
)
meal = journal.log_meal("asha", detections, at(1, 20, 30))
state = journal.tracker_state("asha", at(1, 20, 31))
print(f"\ndinner from detections ({dict(meal.counts)} at confidence >= 0.5): "
      f"{meal.kcal:.0f} kcal")
print(f"  tracker: {state.consumed:.0f}/{state.goal:.0f} "
      f"({state.fraction:.0%}) -> {state.band}")

# A late sweet pushes past the goal.
journal.log_meal("asha", {1: 5}, at(1, 23, 15))
state = journal.tracker_state("asha", at(1, 23, 16))
print(f"\nlate jalebis: tracker {state.consumed:.0f}/{state.goal:.0f} "
      f"({state.fraction:.0%}) -> {state.band}")

# ── Midnight reset ───────────────────────────────────────────────────────────
state = journal.tracker_state("asha", at(2, 0, 5))
print(f"\nfive past local midnight: consumed {state.consumed:.0f} -> {state.band}"
      " (the day rolled over)")

# ── History ──────────────────────────────────────────────────────────────────
journal.log_meal("asha", {3: 2}, at(3, 9))
print("\nhistory, Aug 1-7:")
for day in journal.history("asha", date(2026, 8, 1), date(2026, 8, 7)):
    bar = "#" * int(min(day.consumed / day.goal, 1.2) * 30)
    print(f"  {day.local_date}  {day.consumed:7.0f} kcal  {day.band:<7} {bar}")
