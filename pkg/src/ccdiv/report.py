"""Summary and box-plot statistics over evolved instance sets."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .diversity import set_diversity

SUMMARY_COLUMNS = ("set", "feature", "members", "average", "std", "min", "max", "D_s")
BOX_COLUMNS = ("set", "feature", "min", "q1", "median", "q3", "max")


def _median(sorted_vals: Sequence[float]) -> float:
    k = len(sorted_vals)
    mid = k // 2
    return sorted_vals[mid] if k % 2 else (sorted_vals[mid - 1] + sorted_vals[mid]) / 2.0


def five_number_summary(values: Sequence[float]) -> tuple[float, float, float, float, float]:
    """(min, q1, median, q3, max); quartiles are medians of the halves, median included for odd sizes."""
    v = sorted(float(x) for x in values)
    if len(v) < 2:
        raise ValueError("box statistics need at least 2 values")
    half = (len(v) + 1) // 2
    return v[0], _median(v[:half]), _median(v), _median(v[len(v) - half:]), v[-1]


@dataclass(frozen=True)
class SetSummary:
    name: str
    feature: str
    members: int
    average: float
    std: float
    minimum: float
    maximum: float
    diversity: float | None
    box: tuple[float, float, float, float, float]

    def summary_row(self) -> tuple:
        return (self.name, self.feature, self.members, self.average, self.std,
                self.minimum, self.maximum, "" if self.diversity is None else self.diversity)

    def box_row(self) -> tuple:
        return (self.name, self.feature, *self.box)


def summarize(name: str, feature: str, values: Sequence[float]) -> SetSummary:
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size < 2:
        raise ValueError(f"set {name!r} has {v.size} member(s); need at least 2")
    return SetSummary(
        name=name,
        feature=feature,
        members=int(v.size),
        average=float(np.mean(v)),
        std=float(np.std(v, ddof=1)),
        minimum=float(v[0]),
        maximum=float(v[-1]),
        diversity=set_diversity(v.tolist()) if v.size >= 3 else None,
        box=five_number_summary(v),
    )


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
