#!/usr/bin/env python3
"""Regenerate the golden container fixtures under tests/data/.

The files are checked in; rerun this only when the format itself changes,
and update the digests in tests/test_container.py to match.
"""

import hashlib
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from freqscale import LatentTensor, TrajectoryRecord, build_trajectory, write_container  # noqa: E402

DATA_DIR = Path(__file__).resolve().parents[1] / "tests" / "data"


def golden_tensor() -> LatentTensor:
    plane0 = [[0.0, 0.5, -1.25], [2.0, -0.75, 3.5]]
    plane1 = [[1.0, -2.0, 0.125], [-0.375, 4.0, -5.5]]
    return LatentTensor(np.array([plane0, plane1]))


def golden_trajectory():
    x0 = LatentTensor(np.array([[[1.0, -1.0], [0.5, -0.5]]]))
    cond0 = LatentTensor(np.array([[[0.25, 0.5], [0.75, 1.0]]]))
    uncond0 = LatentTensor(np.array([[[-0.25, -0.5], [-0.75, -1.0]]]))
    x1 = LatentTensor(np.array([[[2.0, -2.0], [0.125, -0.125]]]))
    cond1 = LatentTensor(np.array([[[1.5, -1.5], [3.0, -3.0]]]))
    records = [
        TrajectoryRecord(0, 10.0, x0, cond0, uncond0),
        TrajectoryRecord(1, 5.0, x1, cond1, None),
    ]
    return build_trajectory(records, {"model": "golden", "note": "format fixture"})


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    for name, value in (
        ("golden_tensor.fqs1", golden_tensor()),
        ("golden_trajectory.fqs1", golden_trajectory()),
    ):
        path = DATA_DIR / name
        write_container(value, path)
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        print(f"{name}: {path.stat().st_size} bytes sha256={digest}")


if __name__ == "__main__":
    main()
