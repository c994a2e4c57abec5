"""Every service endpoint, exercised in-process.

The same app normally started with ``platterkit serve`` is driven here via
a test client: create a user, set a goal, log meals (counts and raw
detection lines), read the tracker and history, evaluate detections, and
finally restart the app on the same data directory to show the event log
replaying to identical state.

Run: python demos/04_service_walkthrough.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from platterkit import CalorieTable
from platterkit.service import ServiceConfig, create_app

data_dir = Path(tempfile.mkdtemp(prefix="platter_service_"))
table = CalorieTable.from_csv(
    "class_id,name,kcal\n0,samosa,250\n1,jalebi,150\n2,dal,180\n"
)
config = ServiceConfig(data_dir=data_dir, calorie_table=table)
client = TestClient(create_app(config))


def show(title, response):
    print(f"\n== {title} -> HTTP {response.status_code}")
    print(json.dumps(response.json(), indent=2)[:600])


show("GET /dishes", client.get("/dishes"))

created = client.post(
    "/users",
    json={
        "age": 30, "sex": "male", "height_cm": 175, "weight_kg": 70,
        "activity": "moderate", "timezone": "Asia/Kolkata",
    },
)
show("POST /users", created)
user_id = created.json()["user_id"]

show(
    f"PUT /users/{user_id}/goal",
    client.put(f"/users/{user_id}/goal", json={"variant": "mifflin1990"}),
)

# Tracker before a goal would have been a 409 with code "no_goal"; with the
# goal set, log a manual meal and one from raw detection lines.
show(
    "POST meals (counts)",
    client.post(
        f"/users/{user_id}/meals",
        json={"counts": {"0": 2, "1": 3}, "timestamp": "2026-08-01T13:00:00+05:30"},
    ),
)
show(
    "POST meals (detection lines)",
    client.post(
        f"/users/{user_id}/meals",
        json={
            "detections": "2 0.93 0.4 0.4 0.3 0.3\n2 0.88 0.7 0.6 0.2 0.2\n",
            "image_id": "dinner",
            "timestamp": "2026-08-01T20:00:00+05:30",
        },
    ),
)

show(
    "GET tracker",
    client.get(
        f"/users/{user_id}/tracker", params={"at": "2026-08-01T21:00:00+05:30"}
    ),
)
show(
    "GET history",
    client.get(
        f"/users/{user_id}/history",
        params={"from": "2026-07-31", "to": "2026-08-02"},
    ),
)

show(
    "POST /evaluations (perfect detections)",
    client.post(
        "/evaluations",
        json={
            "classes": ["samosa", "jalebi"],
            "ground_truth": {"img1": "0 0.3 0.3 0.2 0.2\n1 0.7 0.7 0.2 0.2\n"},
            "detections": {"img1": "0 1.0 0.3 0.3 0.2 0.2\n1 1.0 0.7 0.7 0.2 0.2\n"},
            "include_confusion": True,
        },
    ),
)

# ── Durability: a fresh app on the same data directory replays the log ─────
reopened = TestClient(create_app(config))
params = {"from": "2026-07-31", "to": "2026-08-02"}
before = client.get(f"/users/{user_id}/history", params=params).json()
after = reopened.get(f"/users/{user_id}/history", params=params).json()
print(f"\nrestart replay identical: {before == after}")
print(f"event log lives at {data_dir / 'events.jsonl'}:")
for line in (data_dir / "events.jsonl").read_text().splitlines():
    event = json.loads(line)
    print(f"  seq {event['seq']:>2}  {event['kind']}")
