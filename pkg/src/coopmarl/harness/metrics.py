"""Evaluation metrics: rows, CSV persistence, and benchmark aggregation."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import EmptyStreamError

CSV_HEADER = ("step", "mean_return", "std", "min", "max", "wall_seconds")


@dataclass(frozen=True)
class MetricsRow:
    """Summary of one evaluation burst (a fixed number of test episodes)."""

    step: int
    mean_return: float
    std: float
    min_return: float
    max_return: float
    wall_seconds: float

    @staticmethod
    def from_returns(step: int, returns: np.ndarray, wall_seconds: float) -> "MetricsRow":
        returns = np.asarray(returns, dtype=np.float64)
        return MetricsRow(
            step=int(step),
            mean_return=float(returns.mean()),
            std=float(returns.std()),
            min_return=float(returns.min()),
            max_return=float(returns.max()),
            wall_seconds=float(wall_seconds),
        )

    def as_csv_fields(self) -> list[str]:
        return [str(self.step), repr(self.mean_return), repr(self.std),
                repr(self.min_return), repr(self.max_return), repr(self.wall_seconds)]


class MetricsWriter:
    """Appends rows to a UTF-8, LF-terminated CSV file, header first."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(CSV_HEADER)

    def append(self, row: MetricsRow) -> None:
        with open(self.path, "a", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(row.as_csv_fields())


def read_metrics(path: str | Path) -> list[MetricsRow]:
    rows: list[MetricsRow] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise EmptyStreamError(f"{path}: unexpected metrics header {header}")
        for parts in reader:
            rows.append(MetricsRow(int(parts[0]), float(parts[1]), float(parts[2]),
                                   float(parts[3]), float(parts[4]), float(parts[5])))
    return rows


def best_policy_metric(rows: list[MetricsRow]) -> float:
    """Highest evaluation mean across checkpoints (best policy in the run)."""
    if not rows:
        raise EmptyStreamError("no metrics rows")
    return max(row.mean_return for row in rows)


def aggregate_normalized(table: dict[str, dict[str, float]]) -> dict[str, float]:
    """Min-max normalize per task across algorithms, then average per algorithm.

    table maps algorithm -> {task -> best metric}. Every algorithm must
    cover the same task set. When all algorithms tie on a task the
    normalized score is defined as 1.0.
    """
    if not table:
        raise EmptyStreamError("no algorithms to aggregate")
    algos = list(table)
    tasks = sorted(table[algos[0]])
    for algo in algos:
        if sorted(table[algo]) != tasks:
            raise EmptyStreamError(f"task sets differ between algorithms: {algo!r}")
    if not tasks:
        raise EmptyStreamError("no tasks to aggregate")
    scores = {algo: 0.0 for algo in algos}
    for task in tasks:
        column = [table[algo][task] for algo in algos]
        lo, hi = min(column), max(column)
        for algo, value in zip(algos, column):
            scores[algo] += 1.0 if hi == lo else (value - lo) / (hi - lo)
    return {algo: total / len(tasks) for algo, total in scores.items()}
