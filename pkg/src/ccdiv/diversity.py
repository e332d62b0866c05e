"""Feature-based diversity optimisation of discriminating instances.

The population is kept sorted by a single feature. Each member's fitness is
its contribution to set diversity: the product of the gaps to its lower and
upper neighbours, infinite for the two extremes and zero for members whose
feature value is duplicated.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graph import CoverageGraph
from .instance import ChanceInstance, FeatureKind, feature, sample_initial_instance
from .ratio import RatioReport, discounted_ratio
from .seeding import derive_seed
from .solvers import SolverConfig

INF = math.inf
MAX_SWAP_RESAMPLES = 10


class ContractError(ValueError):
    pass


def _check_sorted(values: Sequence[float]) -> None:
    for a, b in zip(values, values[1:]):
        if not a <= b:
            raise ContractError("feature values must be sorted ascending")


def contribution(sorted_features: Sequence[float], i: int) -> float:
    _check_sorted(sorted_features)
    return _contribution(sorted_features, i)


def _contribution(f: Sequence[float], i: int) -> float:
    size = len(f)
    if size < 2:
        raise ValueError("need at least 2 members")
    if not 0 <= i < size:
        raise IndexError(i)
    if i == 0 or i == size - 1:
        return INF
    if f[i] == f[i - 1] or f[i] == f[i + 1]:
        return 0.0
    return (f[i] - f[i - 1]) * (f[i + 1] - f[i])


def contributions(sorted_features: Sequence[float]) -> list[float]:
    _check_sorted(sorted_features)
    return [_contribution(sorted_features, i) for i in range(len(sorted_features))]


def set_diversity(sorted_features: Sequence[float]) -> float:
    """Sum of the interior members' contributions."""
    if len(sorted_features) < 3:
        raise ValueError("set diversity needs at least 3 members")
    return float(sum(contributions(sorted_features)[1:-1]))


def indicator(sorted_features: Sequence[float], j: int) -> int:
    """Direction (+1 up, -1 down) that balances member j's gaps; j is 0-based.

    The top member always moves up and the bottom member down.
    """
    f = sorted_features
    last = len(f) - 1
    if not 0 <= j <= last:
        raise IndexError(j)
    if j == last:
        return 1
    if j != 0 and (f[j] - f[j - 1]) <= (f[j + 1] - f[j]):
        return 1
    return -1


def select_parent(size: int, rng: np.random.Generator) -> int:
    """Bottom, top or a uniform interior member, each with probability 1/3 (0-based)."""
    if size < 3:
        raise ValueError("population must hold at least 3 members")
    u = rng.integers(3)
    if u == 0:
        return 0
    if u == 1:
        return size - 1
    return int(rng.integers(1, size - 1))


# -- mutation ---------------------------------------------------------------

@dataclass(frozen=True)
class MutationParams:
    sigma1: float
    sigma2: float
    lam: float = 5.0
    target: str = "mu"

    def __post_init__(self):
        if self.target not in ("mu", "var"):
            raise ValueError("target must be 'mu' or 'var'")
        if not (self.sigma1 > 0 and self.sigma2 > 0 and self.lam > 0):
            raise ValueError("sigma1, sigma2 and lam must be positive")

    @classmethod
    def defaults(cls, target: str) -> "MutationParams":
        if target == "mu":
            return cls(sigma1=3.0, sigma2=100.0, lam=5.0, target="mu")
        return cls(sigma1=100.0, sigma2=3000.0, lam=5.0, target="var")


def _with_target(instance: ChanceInstance, target: str, values: np.ndarray) -> ChanceInstance:
    return instance.replace(**{target: values})


def mutate_independent(instance: ChanceInstance, ind: int, params: MutationParams,
                       rng) -> ChanceInstance:
    """Shift every value of the target vector by ind * |N(0, sigma1)|, clamped to its range."""
    rng = np.random.default_rng(rng)
    values = getattr(instance, params.target)
    delta = np.abs(rng.normal(0.0, params.sigma1, size=values.size))
    child = np.clip(values + ind * delta, 0.0, instance.ceiling(params.target))
    return _with_target(instance, params.target, child)


def mutate_dependent(instance: ChanceInstance, ind: int, params: MutationParams,
                     rng) -> ChanceInstance:
    """Mean-preserving spread change of the target vector.

    Nodes are split at the mean into a low and a high group. K = min(m + 1,
    |low|, |high|) swaps with m ~ Poisson(lam) each move a fresh high node by
    ind * |delta| and a fresh low node by the opposite amount. A swap that
    would leave [0, ceiling] is redrawn, and dropped after 10 redraws.
    """
    rng = np.random.default_rng(rng)
    values = getattr(instance, params.target).copy()
    top = instance.ceiling(params.target)
    mean = float(np.mean(values))
    low = [int(i) for i in np.flatnonzero(values <= mean)]
    high = [int(i) for i in np.flatnonzero(values > mean)]
    m = int(rng.poisson(params.lam))
    k = min(m + 1, len(low), len(high))
    for _ in range(k):
        for _attempt in range(1 + MAX_SWAP_RESAMPLES):
            a = int(rng.integers(len(low)))
            b = int(rng.integers(len(high)))
            step = ind * abs(rng.normal(0.0, params.sigma2))
            s, t = low[a], high[b]
            new_s, new_t = values[s] - step, values[t] + step
            if 0.0 <= new_s <= top and 0.0 <= new_t <= top:
                values[s], values[t] = new_s, new_t
                low[a] = low[-1]
                low.pop()
                high[b] = high[-1]
                high.pop()
                break
    return _with_target(instance, params.target, values)


def mutate(instance: ChanceInstance, kind: FeatureKind, ind: int, params: MutationParams,
           rng) -> ChanceInstance:
    if params.target != kind.target:
        raise ValueError(f"{kind.value} mutates {kind.target}, params target {params.target}")
    op = mutate_dependent if kind.is_dependent else mutate_independent
    return op(instance, ind, params, rng)


# -- population -------------------------------------------------------------

@dataclass
class Member:
    instance: ChanceInstance
    feature: float
    r_prime: float
    contribution: float = INF


@dataclass
class Population:
    members: list[Member]
    feature_kind: FeatureKind
    threshold: float
    iteration: int = 0
    seed: int | None = None

    @classmethod
    def build(cls, instances: Sequence[ChanceInstance], r_primes: Sequence[float],
              feature_kind: FeatureKind, threshold: float, **kw) -> "Population":
        kind = FeatureKind.parse(feature_kind)
        members = [Member(inst, feature(inst, kind), float(rp))
                   for inst, rp in zip(instances, r_primes, strict=True)]
        pop = cls(members, kind, float(threshold), **kw)
        pop.resort()
        return pop

    def __len__(self) -> int:
        return len(self.members)

    @property
    def features(self) -> list[float]:
        return [m.feature for m in self.members]

    @property
    def diversity(self) -> float:
        return set_diversity(self.features)

    def resort(self) -> None:
        # stable sort keeps insertion order among ties
        self.members.sort(key=lambda m: m.feature)
        self._refresh()

    def _refresh(self) -> None:
        for m, c in zip(self.members, contributions(self.features)):
            m.contribution = c

    def rekey(self, kind: FeatureKind) -> "Population":
        """Same members, re-sorted under a different feature."""
        kind = FeatureKind.parse(kind)
        members = [Member(m.instance, feature(m.instance, kind), m.r_prime) for m in self.members]
        pop = Population(members, kind, self.threshold, self.iteration, self.seed)
        pop.resort()
        return pop

    def insert_and_evict(self, member: Member, rng: np.random.Generator) -> Member:
        """Insert in sorted position, then drop one minimum-contribution member."""
        pos = bisect.bisect_right(self.features, member.feature)
        self.members.insert(pos, member)
        self._refresh()
        contrib = [m.contribution for m in self.members]
        lowest = min(contrib)
        ties = [i for i, c in enumerate(contrib) if c == lowest]
        victim = ties[int(rng.integers(len(ties)))] if len(ties) > 1 else ties[0]
        removed = self.members.pop(victim)
        self._refresh()
        return removed

    def check_invariants(self) -> list[str]:
        """Return a list of violated invariants (empty when consistent)."""
        problems = []
        feats = self.features
        if any(a > b for a, b in zip(feats, feats[1:])):
            problems.append("members not sorted by feature")
        for i, m in enumerate(self.members):
            if m.feature != feature(m.instance, self.feature_kind):
                problems.append(f"member {i}: stale feature cache")
            if not m.r_prime >= self.threshold:
                problems.append(f"member {i}: R' {m.r_prime} below threshold {self.threshold}")
        if not problems:
            fresh = [_contribution(feats, i) for i in range(len(feats))]
            for i, (m, c) in enumerate(zip(self.members, fresh)):
                if m.contribution != c:
                    problems.append(f"member {i}: contribution {m.contribution} != {c}")
        return problems


IterationCallback = Callable[[int, bool, float, float, Population], None]


def evolve_diverse(initial: Population, feature_kind: FeatureKind | str,
                   pair: tuple[SolverConfig, SolverConfig], params: MutationParams,
                   iterations: int, r: int = 10, theta: float = 0.9, seed: int = 0,
                   callback: IterationCallback | None = None) -> Population:
    """Steady-state (mu + 1) loop maximising feature diversity of discriminating instances.

    Each generation mutates one parent towards balancing its feature gaps,
    keeps the child only if its discounted ratio reaches the population
    threshold, and then evicts a minimum-contribution member. The input
    population is not modified.
    """
    kind = FeatureKind.parse(feature_kind)
    if params.target != kind.target:
        raise ValueError(f"{kind.value} needs mutation target {kind.target!r}")
    pop = initial.rekey(kind)
    pop.seed = seed
    if len(pop) < 3:
        raise ValueError("population must hold at least 3 members")
    for m in pop.members:
        if not m.r_prime >= pop.threshold:
            raise ValueError(f"initial member R' {m.r_prime} below threshold {pop.threshold}")

    start = initial.iteration
    for it in range(start, start + iterations):
        rng = np.random.default_rng(derive_seed(seed, "generation", it))
        j = select_parent(len(pop), rng)
        ind = indicator(pop.features, j)
        child = mutate(pop.members[j].instance, kind, ind, params, rng)
        report = discounted_ratio(child, pair[0], pair[1], r, theta,
                                  seed=derive_seed(seed, "child-ratio", it))
        child_feature = feature(child, kind)
        accepted = report.discounted >= pop.threshold
        if accepted:
            pop.insert_and_evict(Member(child, child_feature, report.discounted), rng)
        pop.iteration = it + 1
        if callback is not None:
            callback(it, accepted, child_feature, report.discounted, pop)
    return pop


@dataclass
class ConventionalResult:
    instance: ChanceInstance
    report: RatioReport
    history: list[float] = field(default_factory=list)  # incumbent R' after each step

    @property
    def r_prime(self) -> float:
        return self.report.discounted


def evolve_conventional(graph: CoverageGraph, pair: tuple[SolverConfig, SolverConfig],
                        r: int = 10, theta: float = 0.9, iterations: int = 100, seed: int = 0,
                        mu_max: float = 1000.0, alpha: float = 0.05,
                        sigma_mu: float = 3.0, sigma_var: float = 100.0) -> ConventionalResult:
    """Evolve one discriminating instance on its own with an elitist (1+1) EA on R'."""
    parent = sample_initial_instance(graph, derive_seed(seed, "conventional-init"), mu_max, alpha)
    best = discounted_ratio(parent, pair[0], pair[1], r, theta,
                            seed=derive_seed(seed, "conventional-ratio", 0))
    history = [best.discounted]
    for step in range(1, iterations + 1):
        rng = np.random.default_rng(derive_seed(seed, "conventional-step", step))
        mu = np.clip(parent.mu + rng.normal(0.0, sigma_mu, parent.n), 0.0, parent.mu_max)
        var = np.clip(parent.var + rng.normal(0.0, sigma_var, parent.n), 0.0, parent.var_max)
        child = parent.replace(mu=mu, var=var)
        report = discounted_ratio(child, pair[0], pair[1], r, theta,
                                  seed=derive_seed(seed, "conventional-ratio", step))
        if report.discounted >= best.discounted:
            parent, best = child, report
        history.append(best.discounted)
    return ConventionalResult(parent, best, history)
