"""Undirected coverage graphs: Matrix Market ingestion, random generation, coverage counting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np


class GraphFormatError(ValueError):
    """Malformed graph input. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GraphBoundsError(GraphFormatError):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CoverageGraph:
    """Immutable undirected graph stored in CSR form (sorted neighbour lists, no self-loops)."""

    node_count: int
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]]) -> "CoverageGraph":
        if node_count < 1:
            raise ValueError("node_count must be positive")
        pairs = set()
        for i, j in edges:
            i, j = int(i), int(j)
            if not (0 <= i < node_count and 0 <= j < node_count):
                raise GraphBoundsError(f"edge ({i}, {j}) outside [0, {node_count})")
            if i == j:
                continue
            pairs.add((min(i, j), max(i, j)))
        neighbours: list[list[int]] = [[] for _ in range(node_count)]
        for i, j in pairs:
            neighbours[i].append(j)
            neighbours[j].append(i)
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(a) for a in neighbours])
        indices = np.fromiter(
            (v for a in neighbours for v in sorted(a)), dtype=np.int64, count=int(indptr[-1])
        )
        return cls(node_count, indptr, indices)

    @property
    def adjacency(self) -> list[list[int]]:
        return [self.neighbours(i).tolist() for i in range(self.node_count)]

    def neighbours(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def edges(self) -> list[tuple[int, int]]:
        """Edges as (i, j) with i < j, sorted lexicographically."""
        out = []
        for i in range(self.node_count):
            out.extend((i, int(j)) for j in self.neighbours(i) if j > i)
        return out

    def __eq__(self, other):
        if not isinstance(other, CoverageGraph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {"n": self.node_count, "edges": [[i, j] for i, j in self.edges()]}

    @classmethod
    def from_dict(cls, doc: dict) -> "CoverageGraph":
        try:
            n = doc["n"]
            edges = doc["edges"]
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"graph document missing field {exc}") from None
        if not isinstance(n, int) or n < 1:
            raise GraphFormatError("graph field 'n' must be a positive integer")
        return cls.from_edges(n, (tuple(e) for e in edges))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


def load_matrix_market(text: str | TextIO) -> CoverageGraph:
    """Parse a coordinate-format Matrix Market file into an undirected graph.

    Entry values are ignored, indices are 1-based, self-loops are dropped and
    (i, j) / (j, i) pairs collapse to one edge. Non-square matrices use the
    larger dimension as the node count.
    """
    lines = text.splitlines() if isinstance(text, str) else text.read().splitlines()
    if not lines or not lines[0].lower().startswith("%%matrixmarket matrix coordinate"):
        raise GraphFormatError("expected '%%MatrixMarket matrix coordinate' header", 1)

    pos = 1
    while pos < len(lines) and lines[pos].startswith("%"):
        pos += 1
    if pos >= len(lines) or not lines[pos].strip():
        raise GraphFormatError("missing size line", pos + 1)
    size = lines[pos].split()
    try:
        rows, cols, nnz = (int(tok) for tok in size[:3])
    except ValueError:
        raise GraphFormatError(f"bad size line {lines[pos]!r}", pos + 1) from None
    if len(size) != 3 or rows < 1 or cols < 1 or nnz < 0:
        raise GraphFormatError(f"bad size line {lines[pos]!r}", pos + 1)

    n = max(rows, cols)
    edges = []
    for lineno in range(pos + 2, len(lines) + 1):
        raw = lines[lineno - 1].strip()
        if not raw or raw.startswith("%"):
            continue
        tok = raw.split()
        try:
            i, j = int(tok[0]), int(tok[1])
        except (ValueError, IndexError):
            raise GraphFormatError(f"bad entry {raw!r}", lineno) from None
        if not (1 <= i <= rows and 1 <= j <= cols):
            raise GraphBoundsError(f"entry ({i}, {j}) outside {rows}x{cols}", lineno)
        edges.append((i - 1, j - 1))
    if len(edges) != nnz:
        raise GraphFormatError(f"declared {nnz} entries, found {len(edges)}")
    return CoverageGraph.from_edges(n, edges)


def to_matrix_market(graph: CoverageGraph) -> str:
    """Serialise as a symmetric pattern matrix (lower triangle, 1-based)."""
    out = [
        "%%MatrixMarket matrix coordinate pattern symmetric",
        f"{graph.node_count} {graph.node_count} {graph.edge_count}",
    ]
    out.extend(f"{j + 1} {i + 1}" for i, j in graph.edges())
    return "\n".join(out) + "\n"


def generate_random_graph(n: int, p: float, seed: int) -> CoverageGraph:
    """Erdos-Renyi G(n, p): every unordered pair is an edge independently with probability p."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(len(rows)) < p
    return CoverageGraph.from_edges(n, zip(rows[keep].tolist(), cols[keep].tolist()))


def coverage_count(graph: CoverageGraph, solution) -> int:
    """Number of distinct nodes that are selected or adjacent to a selected node."""
    bits = np.asarray(solution, dtype=bool)
    if bits.shape != (graph.node_count,):
        raise DimensionError(f"solution length {bits.size} != node count {graph.node_count}")
    covered = bits.copy()
    for i in np.flatnonzero(bits):
        covered[graph.neighbours(i)] = True
    return int(covered.sum())


def load_graph(path) -> CoverageGraph:
    """Load a graph from a ``.mtx`` file or a canonical JSON graph document."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".mtx") or text.startswith("%%"):
        return load_matrix_market(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"{path}: not JSON ({exc.msg})", exc.lineno) from None
    return CoverageGraph.from_dict(doc)
