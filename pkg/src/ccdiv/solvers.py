"""(1+1) EA, fast GA and greedy hill climber for chance-constrained maximum coverage.

All three share one compiled loop: start at the empty set, propose an
offspring by flipping bits, keep it if it is not worse under the
lexicographic (violation, then coverage) order. Coverage is maintained
incrementally via per-node counts of selected closed neighbours; cost sums
are recomputed from scratch each step so the recorded fitness always equals
a fresh evaluation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np

from .graph import coverage_count
from .instance import ChanceInstance, surrogate_value

EPSILON = 1e-2


class Algorithm(enum.Enum):
    EA = "EA"
    FGA = "FGA"
    GHC = "GHC"

    @classmethod
    def parse(cls, value) -> "Algorithm":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown algorithm {value!r}; expected EA, FGA or GHC") from None


_CODES = {Algorithm.EA: 0, Algorithm.FGA: 1, Algorithm.GHC: 2}


@dataclass(frozen=True)
class SolverConfig:
    algorithm: Algorithm = Algorithm.EA
    evaluation_budget: int = 10_000
    seed: int = 0
    beta: float = 1.5

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        if self.evaluation_budget < 1:
            raise ValueError("evaluation_budget must be >= 1")
        if not self.beta > 1:
            raise ValueError("beta must exceed 1")


@dataclass(frozen=True)
class Fitness:
    violation: float
    coverage: int

    def beats(self, other: "Fitness") -> bool:
        return self.violation < other.violation or (
            self.violation == other.violation and self.coverage > other.coverage
        )

    def not_worse(self, other: "Fitness") -> bool:
        return not other.beats(self)

    @property
    def feasible(self) -> bool:
        return self.violation == 0.0


@dataclass
class SolverResult:
    solution: np.ndarray
    fitness: Fitness
    best_feasible_coverage: int  # -1 if no feasible solution was evaluated
    evaluations: int
    trace_violation: np.ndarray | None = None
    trace_coverage: np.ndarray | None = None

    @property
    def objective(self) -> float:
        """Best objective for ratio purposes: feasible coverage, or EPSILON if none >= 1."""
        return float(self.best_feasible_coverage) if self.best_feasible_coverage >= 1 else EPSILON


def evaluate_fitness(instance: ChanceInstance, solution) -> Fitness:
    value = surrogate_value(instance, solution)
    return Fitness(max(0.0, value - instance.budget), coverage_count(instance.graph, solution))


def power_law_weights(n: int, beta: float) -> np.ndarray:
    """P(k) proportional to k^-beta on k = 1..max(1, n // 2)."""
    ks = np.arange(1, max(1, n // 2) + 1, dtype=np.float64)
    w = ks**-beta
    return w / w.sum()


@numba.njit(cache=True)
def _toggle(pos, bits, counts, indptr, indices):
    # returns the change in coverage
    delta = 0
    step = 1 if bits[pos] == 0 else -1
    bits[pos] = 1 - bits[pos]
    c = counts[pos]
    counts[pos] = c + step
    if step == 1 and c == 0:
        delta += 1
    elif step == -1 and c == 1:
        delta -= 1
    for q in range(indptr[pos], indptr[pos + 1]):
        v = indices[q]
        c = counts[v]
        counts[v] = c + step
        if step == 1 and c == 0:
            delta += 1
        elif step == -1 and c == 1:
            delta -= 1
    return delta


@numba.njit(cache=True)
def _violation(bits, mu, var, alpha, budget):
    mc = 0.0
    cv = 0.0
    for i in range(bits.shape[0]):
        if bits[i]:
            mc += mu[i]
            cv += var[i]
    s = mc + math.sqrt(cv * (1.0 - alpha) / alpha)
    return max(0.0, s - budget)


@numba.njit(cache=True)
def _run_kernel(indptr, indices, mu, var, alpha, budget, algo, evals, cdf, seed,
                trace_viol, trace_cov):
    np.random.seed(seed)
    n = mu.shape[0]
    bits = np.zeros(n, dtype=np.uint8)
    counts = np.zeros(n, dtype=np.int64)
    perm = np.arange(n)
    flipped = np.empty(n, dtype=np.int64)
    record = trace_viol.shape[0] > 0

    cov = 0
    viol = _violation(bits, mu, var, alpha, budget)
    best_feasible = 0 if viol == 0.0 else -1
    done = 1
    if record:
        trace_viol[0] = viol
        trace_cov[0] = cov

    while done < evals:
        if algo == 2:
            k = 1
            flipped[0] = np.random.randint(0, n)
        else:
            if algo == 0:
                rate = 1.0 / n
            else:
                u = np.random.random()
                s = 0
                while s < cdf.shape[0] - 1 and u > cdf[s]:
                    s += 1
                rate = (s + 1.0) / n
            k = np.random.binomial(n, rate)
            # partial Fisher-Yates draws k distinct positions
            for t in range(k):
                r = np.random.randint(t, n)
                tmp = perm[t]
                perm[t] = perm[r]
                perm[r] = tmp
                flipped[t] = perm[t]

        child_cov = cov
        for t in range(k):
            child_cov += _toggle(flipped[t], bits, counts, indptr, indices)
        child_viol = _violation(bits, mu, var, alpha, budget)
        done += 1

        if child_viol == 0.0 and child_cov > best_feasible:
            best_feasible = child_cov
        if child_viol < viol or (child_viol == viol and child_cov >= cov):
            viol = child_viol
            cov = child_cov
        else:
            for t in range(k - 1, -1, -1):
                _toggle(flipped[t], bits, counts, indptr, indices)
        if record:
            trace_viol[done - 1] = viol
            trace_cov[done - 1] = cov

    return bits, viol, cov, best_feasible, done


def run_solver(instance: ChanceInstance, config: SolverConfig, trace: bool = False) -> SolverResult:
    """Run one solver for exactly ``config.evaluation_budget`` fitness evaluations."""
    n = instance.n
    cdf = np.cumsum(power_law_weights(n, config.beta))
    cdf[-1] = 1.0
    size = config.evaluation_budget if trace else 0
    tv = np.zeros(size, dtype=np.float64)
    tc = np.zeros(size, dtype=np.int64)
    g = instance.graph
    bits, viol, cov, best, done = _run_kernel(
        g.indptr, g.indices, instance.mu, instance.var, instance.alpha, instance.budget,
        _CODES[config.algorithm], config.evaluation_budget, cdf,
        np.uint32(config.seed & 0xFFFFFFFF), tv, tc,
    )
    return SolverResult(
        solution=bits.astype(bool),
        fitness=Fitness(float(viol), int(cov)),
        best_feasible_coverage=int(best),
        evaluations=int(done),
        trace_violation=tv if trace else None,
        trace_coverage=tc if trace else None,
    )


def _require(config: SolverConfig, algorithm: Algorithm) -> None:
    if config.algorithm is not algorithm:
        raise ValueError(f"config targets {config.algorithm.value}, expected {algorithm.value}")


def run_one_plus_one_ea(instance: ChanceInstance, config: SolverConfig) -> np.ndarray:
    _require(config, Algorithm.EA)
    return run_solver(instance, config).solution


def run_fga(instance: ChanceInstance, config: SolverConfig) -> np.ndarray:
    _require(config, Algorithm.FGA)
    return run_solver(instance, config).solution


def run_ghc(instance: ChanceInstance, config: SolverConfig) -> np.ndarray:
    _require(config, Algorithm.GHC)
    return run_solver(instance, config).solution


def best_objective(instance: ChanceInstance, config: SolverConfig) -> float:
    return run_solver(instance, config).objective
