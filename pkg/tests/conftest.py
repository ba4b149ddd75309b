import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from amarec.dataset import RatingEvent, binarize, temporal_split


def synthetic_events(m=30, n=20, per_user=12, seed=7):
    """Dense-ish synthetic rating log with timestamps and 1-5 ratings."""
    rng = np.random.default_rng(seed)
    events = []
    for u in range(m):
        items = rng.choice(n, size=min(per_user, n), replace=False)
        for t, j in enumerate(items):
            events.append(
                RatingEvent(
                    user_id=f"u{u:03d}",
                    item_id=f"i{int(j):03d}",
                    rating=float(rng.integers(1, 6)),
                    timestamp=1_000_000 + 100 * t + int(rng.integers(0, 50)),
                )
            )
    return events


@pytest.fixture(scope="session")
def tiny_split():
    events = binarize(synthetic_events(), threshold=2)
    return temporal_split(events)


def write_movielens_file(path, events):
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(f"{e.user_id}::{e.item_id}::{e.rating:g}::{e.timestamp}\n")
