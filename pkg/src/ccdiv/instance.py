"""Chance-constrained coverage instances, the Chebyshev surrogate and instance features."""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .graph import CoverageGraph, DimensionError, load_graph


class InstanceValidationError(ValueError):
    pass


class FeatureKind(enum.Enum):
    FT1 = "ft1"  # mean of expected costs
    FT2 = "ft2"  # mean of variances
    FT3 = "ft3"  # population std of expected costs
    FT4 = "ft4"  # population std of variances

    @classmethod
    def parse(cls, value) -> "FeatureKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown feature {value!r}; expected one of ft1..ft4") from None

    @property
    def target(self) -> str:
        """Name of the cost vector this feature is computed from."""
        return "mu" if self in (FeatureKind.FT1, FeatureKind.FT3) else "var"

    @property
    def is_dependent(self) -> bool:
        return self in (FeatureKind.FT3, FeatureKind.FT4)


@dataclass(eq=False)
class ChanceInstance:
    graph: CoverageGraph
    mu: np.ndarray
    var: np.ndarray
    budget: float
    alpha: float
    mu_max: float
    graph_ref: str | None = field(default=None, repr=False)

    def __post_init__(self):
        self.mu = np.array(self.mu, dtype=np.float64)
        self.var = np.array(self.var, dtype=np.float64)
        self.budget = float(self.budget)
        self.alpha = float(self.alpha)
        self.mu_max = float(self.mu_max)
        self.validate()

    @property
    def n(self) -> int:
        return self.graph.node_count

    @property
    def var_max(self) -> float:
        return self.mu_max**2 / 3.0

    def ceiling(self, target: str) -> float:
        return self.mu_max if target == "mu" else self.var_max

    def validate(self) -> None:
        n = self.graph.node_count
        if not (self.mu_max > 0 and math.isfinite(self.mu_max)):
            raise InstanceValidationError(f"mu_max must be positive, got {self.mu_max}")
        if not (self.budget > 0 and math.isfinite(self.budget)):
            raise InstanceValidationError(f"budget must be positive, got {self.budget}")
        if not 0 < self.alpha <= 0.5:
            raise InstanceValidationError(f"alpha must lie in (0, 0.5], got {self.alpha}")
        for name, vec, top in (("mu", self.mu, self.mu_max), ("var", self.var, self.var_max)):
            if vec.shape != (n,):
                raise InstanceValidationError(f"{name} has length {vec.size}, graph has {n} nodes")
            bad = np.flatnonzero(~((vec >= 0) & (vec <= top)))
            if bad.size:
                i = int(bad[0])
                raise InstanceValidationError(f"{name}[{i}] = {vec[i]!r} outside [0, {top!r}]")

    def replace(self, **changes) -> "ChanceInstance":
        fields = dict(graph=self.graph, mu=self.mu, var=self.var, budget=self.budget,
                      alpha=self.alpha, mu_max=self.mu_max, graph_ref=self.graph_ref)
        fields.update(changes)
        return ChanceInstance(**fields)

    def same_values(self, other: "ChanceInstance") -> bool:
        return (
            self.graph == other.graph
            and np.array_equal(self.mu, other.mu)
            and np.array_equal(self.var, other.var)
            and (self.budget, self.alpha, self.mu_max) == (other.budget, other.alpha, other.mu_max)
        )


def _bits(instance: ChanceInstance, solution) -> np.ndarray:
    bits = np.asarray(solution, dtype=bool)
    if bits.shape != (instance.n,):
        raise DimensionError(f"solution length {bits.size} != node count {instance.n}")
    return bits


def chebyshev_bound(mean_cost: float, cost_variance: float, alpha: float) -> float:
    return mean_cost + math.sqrt(cost_variance * (1.0 - alpha) / alpha)


def surrogate_value(instance: ChanceInstance, solution) -> float:
    """Upper estimate of the solution cost that is exceeded with probability at most alpha."""
    bits = _bits(instance, solution)
    idx = np.flatnonzero(bits)
    # sequential sums, matching the solver kernels bit for bit
    mean_cost = 0.0
    cost_var = 0.0
    for i in idx:
        mean_cost += instance.mu[i]
        cost_var += instance.var[i]
    return chebyshev_bound(mean_cost, cost_var, instance.alpha)


def is_feasible(instance: ChanceInstance, solution) -> bool:
    return surrogate_value(instance, solution) <= instance.budget


def _mean_and_std(values: np.ndarray) -> tuple[float, float]:
    # centring on the first entry keeps the std exactly 0 for constant vectors
    shifted = values - values[0]
    centred = shifted - np.mean(shifted)
    std = float(np.sqrt(np.mean(centred * centred)))
    return float(np.mean(values)), std


def feature(instance: ChanceInstance, kind: FeatureKind | str) -> float:
    kind = FeatureKind.parse(kind)
    values = instance.mu if kind.target == "mu" else instance.var
    mean, std = _mean_and_std(values)
    return std if kind.is_dependent else mean


def default_budget(n: int, mu_max: float) -> float:
    return n / 30.0 * mu_max / 2.0


def sample_initial_instance(graph: CoverageGraph, seed: int, mu_max: float = 1000.0,
                            alpha: float = 0.05) -> ChanceInstance:
    """Random instance: mu_i ~ U(0, mu_max), var_i ~ U(0, mu_i^2 / 3), budget n/30 * mu_max/2."""
    if mu_max <= 0:
        raise ValueError("mu_max must be positive")
    rng = np.random.default_rng(seed)
    n = graph.node_count
    mu = rng.uniform(0.0, mu_max, size=n)
    var = rng.uniform(0.0, 1.0, size=n) * (mu * mu / 3.0)
    return ChanceInstance(graph, mu, var, default_budget(n, mu_max), alpha, mu_max)


# -- JSON documents ---------------------------------------------------------

def instance_to_dict(instance: ChanceInstance, graph_ref: str | None = None) -> dict:
    graph = graph_ref if graph_ref is not None else instance.graph.to_dict()
    return {
        "graph": graph,
        "mu": instance.mu.tolist(),
        "var": instance.var.tolist(),
        "budget": instance.budget,
        "alpha": instance.alpha,
        "mu_max": instance.mu_max,
    }


def serialize_instance(instance: ChanceInstance, graph_ref: str | None = None) -> str:
    """JSON text; floats use shortest round-trip repr so nothing is lost."""
    return json.dumps(instance_to_dict(instance, graph_ref), indent=1) + "\n"


def deserialize_instance(document: str | dict, base_dir: str | None = None,
                         graph: CoverageGraph | None = None) -> ChanceInstance:
    """Parse and validate an instance document.

    ``graph`` may be an embedded graph document or a path (resolved against
    ``base_dir``). A pre-loaded ``graph`` argument short-circuits the lookup.
    """
    doc = json.loads(document) if isinstance(document, str) else document
    try:
        graph_field = doc["graph"]
        mu, var = doc["mu"], doc["var"]
        budget, alpha, mu_max = doc["budget"], doc["alpha"], doc["mu_max"]
    except KeyError as exc:
        raise InstanceValidationError(f"instance document missing field {exc}") from None
    ref = None
    if graph is None:
        if isinstance(graph_field, str):
            ref = graph_field
            graph = load_graph(os.path.join(base_dir or ".", graph_field))
        else:
            graph = CoverageGraph.from_dict(graph_field)
    elif isinstance(graph_field, str):
        ref = graph_field
    for name, vec in (("mu", mu), ("var", var)):
        if not isinstance(vec, list) or not all(isinstance(v, (int, float)) for v in vec):
            raise InstanceValidationError(f"{name} must be a list of numbers")
    return ChanceInstance(graph, mu, var, budget, alpha, mu_max, graph_ref=ref)


def load_instance(path, graph: CoverageGraph | None = None) -> ChanceInstance:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceValidationError(f"{path}: not JSON ({exc.msg})") from None
    return deserialize_instance(doc, base_dir=os.path.dirname(os.fspath(path)), graph=graph)
