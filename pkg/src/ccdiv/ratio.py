"""Discounted performance ratio of a solver pair and the acceptance threshold."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from statistics import NormalDist

import numpy as np

from .instance import ChanceInstance
from .seeding import derive_seed
from .solvers import SolverConfig, run_solver


def k_theta(theta: float) -> float:
    """Standard normal quantile at confidence level theta."""
    if not 0.5 < theta < 1.0:
        raise ValueError(f"theta must lie in (0.5, 1), got {theta}")
    return NormalDist().inv_cdf(theta)


@dataclass(frozen=True)
class RatioReport:
    per_run_a1: tuple[float, ...]
    per_run_a2: tuple[float, ...]
    ratios: tuple[float, ...]
    mean_ratio: float
    std_ratio: float
    discounted: float
    theta: float
    algorithms: tuple[str, str] = ("", "")

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("per_run_a1", "per_run_a2", "ratios", "algorithms"):
            d[key] = list(d[key])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "RatioReport":
        return cls(
            per_run_a1=tuple(doc["per_run_a1"]),
            per_run_a2=tuple(doc["per_run_a2"]),
            ratios=tuple(doc["ratios"]),
            mean_ratio=doc["mean_ratio"],
            std_ratio=doc["std_ratio"],
            discounted=doc["discounted"],
            theta=doc["theta"],
            algorithms=tuple(doc.get("algorithms", ("", ""))),
        )


def report_from_objectives(a1, a2, theta: float, algorithms=("", "")) -> RatioReport:
    """Pair run i of one solver with run i of the other and discount by the ratio spread."""
    a1 = np.asarray(a1, dtype=np.float64)
    a2 = np.asarray(a2, dtype=np.float64)
    if a1.shape != a2.shape or a1.ndim != 1:
        raise ValueError("per-run objective vectors must have equal length")
    if a1.size < 2:
        raise ValueError("at least 2 runs are needed for a standard deviation")
    if np.any(a1 <= 0) or np.any(a2 <= 0):
        raise ValueError("objectives must be positive")
    ratios = a1 / a2
    mean = float(np.mean(ratios))
    std = float(np.std(ratios, ddof=1))
    if np.all(ratios == ratios[0]):
        mean, std = float(ratios[0]), 0.0
    return RatioReport(
        per_run_a1=tuple(a1.tolist()),
        per_run_a2=tuple(a2.tolist()),
        ratios=tuple(ratios.tolist()),
        mean_ratio=mean,
        std_ratio=std,
        discounted=mean - k_theta(theta) * std,
        theta=theta,
        algorithms=tuple(algorithms),
    )


def discounted_ratio(instance: ChanceInstance, alg1: SolverConfig, alg2: SolverConfig,
                     r: int = 10, theta: float = 0.9, seed: int = 0) -> RatioReport:
    """Run each solver r times and compute R' = mean(R) - K_theta * std(R).

    Run seeds depend on (seed, algorithm name, run index) only, so swapping
    the pair yields exactly reciprocal ratios.
    """
    if r < 2:
        raise ValueError("r must be at least 2")
    objectives = []
    for cfg in (alg1, alg2):
        tag = f"run/{cfg.algorithm.value}"
        objectives.append([
            run_solver(instance, replace(cfg, seed=derive_seed(seed, tag, i))).objective
            for i in range(r)
        ])
    return report_from_objectives(*objectives, theta=theta,
                                  algorithms=(alg1.algorithm.value, alg2.algorithm.value))


def threshold_from(r_prime_baseline: float) -> float:
    """Acceptance threshold T = 0.8 (R' - 1) + 1, which stays above 1."""
    if not r_prime_baseline > 1:
        raise ValueError(f"R' = {r_prime_baseline} is not discriminating (must exceed 1)")
    return 0.8 * (r_prime_baseline - 1.0) + 1.0


def is_discriminating(value: float) -> bool:
    return math.isfinite(value) and value > 1.0
