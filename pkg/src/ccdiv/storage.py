"""Population checkpoints and trajectory logs on disk."""

from __future__ import annotations

import csv
import glob
import json
import math
import os
from dataclasses import dataclass

from .diversity import Member, Population
from .graph import load_graph
from .instance import FeatureKind, load_instance, serialize_instance

MANIFEST = "manifest.json"
GRAPH_FILE = "graph.json"
TRAJECTORY_COLUMNS = ("iteration", "accepted", "child_feature", "child_r_prime", "D_s_after")


class CheckpointError(ValueError):
    pass


def _encode(x: float):
    # strict JSON has no infinity literal
    return "inf" if math.isinf(x) else x


def _decode(x) -> float:
    return math.inf if x == "inf" else float(x)


def write_population(pop: Population, directory, extra: dict | None = None) -> str:
    """Write graph.json, one member_NNN.json per member and manifest.json."""
    os.makedirs(directory, exist_ok=True)
    for stale in glob.glob(os.path.join(directory, "member_*.json")):
        os.remove(stale)
    graph = pop.members[0].instance.graph
    with open(os.path.join(directory, GRAPH_FILE), "w", encoding="utf-8") as fh:
        fh.write(graph.to_json() + "\n")
    entries = []
    for k, m in enumerate(pop.members):
        name = f"member_{k:03d}.json"
        with open(os.path.join(directory, name), "w", encoding="utf-8") as fh:
            fh.write(serialize_instance(m.instance, graph_ref=GRAPH_FILE))
        entries.append({"file": name, "feature": m.feature, "r_prime": m.r_prime,
                        "contribution": _encode(m.contribution)})
    manifest = {
        "feature_kind": pop.feature_kind.value,
        "threshold": pop.threshold,
        "members": entries,
        "D_s": pop.diversity if len(pop) >= 3 else None,
        "iteration": pop.iteration,
        "seed": pop.seed,
    }
    manifest.update(extra or {})
    path = os.path.join(directory, MANIFEST)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
        fh.write("\n")
    return path


@dataclass
class Checkpoint:
    population: Population
    manifest: dict


def read_population(directory) -> Checkpoint:
    """Load a checkpoint and verify every cached value against a recomputation."""
    path = os.path.join(directory, MANIFEST)
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        raise CheckpointError(f"{directory}: no {MANIFEST}") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not JSON ({exc.msg})") from None
    try:
        kind = FeatureKind.parse(manifest["feature_kind"])
        threshold = float(manifest["threshold"])
        entries = manifest["members"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CheckpointError(f"{path}: bad manifest ({exc})") from None

    graph = load_graph(os.path.join(directory, GRAPH_FILE))
    members = []
    for e in entries:
        inst = load_instance(os.path.join(directory, e["file"]), graph=graph)
        members.append(Member(inst, float(e["feature"]), float(e["r_prime"]),
                              _decode(e["contribution"])))
    pop = Population(members, kind, threshold, int(manifest.get("iteration", 0)),
                     manifest.get("seed"))
    problems = pop.check_invariants()
    if problems:
        raise CheckpointError(f"{directory}: " + "; ".join(problems))
    return Checkpoint(pop, manifest)


class TrajectoryLog:
    """Collects one row per generation; usable directly as an evolve_diverse callback."""

    def __init__(self):
        self.rows: list[tuple] = []

    def __call__(self, iteration, accepted, child_feature, child_r_prime, pop):
        self.rows.append((iteration, int(accepted), child_feature, child_r_prime, pop.diversity))

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_COLUMNS)
            w.writerows(self.rows)
