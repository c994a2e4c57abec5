import sys
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).parent
sys.path.insert(0, str(TESTS_DIR))

DATA_DIR = TESTS_DIR / "data"


@pytest.fixture()
def counts_fixture_path() -> Path:
    return DATA_DIR / "dish_class_counts.csv"


def write_random_dataset(root: Path, rng: np.random.Generator, num_classes=4, num_images=8):
    """Materialize a small random labeled dataset on disk; returns paths."""
    classes_path = root / "classes.txt"
    labels_dir = root / "labels"
    labels_dir.mkdir(parents=True, exist_ok=True)
    classes_path.write_text(
        "".join(f"dish{i}\n" for i in range(num_classes)), encoding="utf-8"
    )
    for i in range(num_images):
        lines = []
        for _ in range(int(rng.integers(0, 5))):
            class_id = int(rng.integers(num_classes))
            cx, cy = rng.uniform(0.2, 0.8, size=2)
            w, h = rng.uniform(0.05, 0.35, size=2)
            lines.append(f"{class_id} {cx:.6f} {cy:.6f} {w:.6f} {h:.6f}")
        (labels_dir / f"img{i:03d}.txt").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
    return classes_path, labels_dir
