"""Learning-curve rows and their append-only CSV form.

Header: episode,reward,avg20,steps,wall_ms. Rows are flushed per episode so
a crash leaves a parseable prefix; avg20 is always recomputable from the
reward column.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ConfigError

CSV_HEADER = ["episode", "reward", "avg20", "steps", "wall_ms"]


class LearningCurve:
    def __init__(self, rows=None):
        self.rows = list(rows) if rows else []

    @property
    def rewards(self):
        return [r["reward"] for r in self.rows]

    def append(self, row: dict):
        self.rows.append(row)

    def trailing_mean(self, k=20):
        r = self.rewards
        return float(np.mean(r[-k:])) if r else float("nan")

    def recompute_avg20(self):
        out = []
        r = self.rewards
        for i in range(len(r)):
            out.append(float(np.mean(r[max(0, i - 19): i + 1])))
        return out

    def __len__(self):
        return len(self.rows)


class CurveWriter:
    """Appends one CSV row per episode, flushing eagerly."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(CSV_HEADER)
        self._fh.flush()

    def __call__(self, row: dict):
        self._writer.writerow([
            row["episode"], repr(float(row["reward"])), repr(float(row["avg20"])),
            row["steps"], f"{row['wall_ms']:.3f}",
        ])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_curve(path) -> LearningCurve:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected curve header {header!r}")
        for rec in reader:
            if len(rec) != len(CSV_HEADER):
                continue  # tolerate a torn final line from a crash
            rows.append({
                "episode": int(rec[0]),
                "reward": float(rec[1]),
                "avg20": float(rec[2]),
                "steps": int(rec[3]),
                "wall_ms": float(rec[4]),
            })
    return LearningCurve(rows)


def aggregate_mean_band(curves: list[LearningCurve]):
    """Per-episode mean and spread across seeds, up to the shortest curve."""
    if not curves:
        raise ConfigError("no curves to aggregate")
    n = min(len(c) for c in curves)
    stack = np.array([[c.rows[i]["reward"] for i in range(n)] for c in curves])
    avg20 = np.array([[c.rows[i]["avg20"] for i in range(n)] for c in curves])
    return {
        "episodes": list(range(1, n + 1)),
        "reward_mean": stack.mean(axis=0).tolist(),
        "reward_std": stack.std(axis=0).tolist(),
        "avg20_mean": avg20.mean(axis=0).tolist(),
        "avg20_std": avg20.std(axis=0).tolist(),
        "n_seeds": len(curves),
    }
