"""Walk substrates: labeled graphs, standard families and symmetry reductions.

Every vertex carries an ordered list of ports ``(label, neighbor)``. Labels run
over ``1..max_degree`` and are distinct at each vertex; a coin basis state
``j`` steers the walker through the port labeled ``j + 1``.

Families
--------
- ``line-window``: positions ``-W..W`` (vertex ``i`` sits at ``i - W``), label 1
  steps right, label 2 steps left, no wraparound.
- ``circle``: ``N`` vertices, label 1 is ``i + 1 mod N``, label 2 is ``i - 1 mod N``.
- ``hypercube``: ``2**d`` bit-string vertices, label ``j`` flips bit ``j - 1``.
- ``glued-trees``: two depth-``n`` binary trees identified along their leaves,
  vertices ordered column by column.
- ``general``: any edge list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .ctqw import Generator

__all__ = [
    "GraphSizeError",
    "LabeledGraph",
    "LabelingCheck",
    "BiasedChain",
    "build_family",
    "from_edges",
    "complete_graph",
    "pad_self_loops",
    "validate_labeling",
    "reduce_hypercube_chain",
    "reduce_glued_trees_generator",
    "glued_trees_columns",
    "FAMILIES",
]

FAMILIES = ("line-window", "circle", "hypercube", "glued-trees", "general")

Port = tuple[int, int]


class GraphSizeError(ValueError):
    """Raised when a family is requested with an invalid size parameter."""


@dataclass(frozen=True, eq=False)
class LabeledGraph:
    """Undirected graph with per-vertex labeled ports.

    Immutable after construction. ``coords`` gives the embedding of each
    vertex on the line for line windows; it defaults to the vertex ids.
    """

    ports: tuple[tuple[Port, ...], ...]
    max_degree: int
    family: str = "general"
    coords: tuple | None = None
    params: dict = field(default_factory=dict)

    @property
    def vertex_count(self) -> int:
        return len(self.ports)

    def degree(self, v: int) -> int:
        return len(self.ports[v])

    def labels(self, v: int) -> tuple[int, ...]:
        return tuple(label for label, _ in self.ports[v])

    def neighbor(self, v: int, label: int) -> int | None:
        for lab, w in self.ports[v]:
            if lab == label:
                return w
        return None

    def neighbors(self, v: int) -> list[int]:
        return [w for _, w in self.ports[v]]

    @cached_property
    def coordinates(self) -> np.ndarray:
        if self.coords is None:
            return np.arange(self.vertex_count)
        return np.asarray(self.coords)

    def index_of(self, coord) -> int:
        """Vertex id of the vertex embedded at ``coord``."""
        hit = np.flatnonzero(self.coordinates == coord)
        if hit.size == 0:
            raise KeyError(f"no vertex at coordinate {coord!r}")
        return int(hit[0])

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """Array ``(max_degree, n)``: neighbor through label ``j+1``, or -1."""
        table = np.full((self.max_degree, self.vertex_count), -1, dtype=np.int64)
        for v, ports in enumerate(self.ports):
            for label, w in ports:
                table[label - 1, v] = w
        return table

    @cached_property
    def reverse_label_table(self) -> np.ndarray:
        """Label (0-based) of the port at the far end of each port, or -1."""
        table = np.full((self.max_degree, self.vertex_count), -1, dtype=np.int64)
        used: dict[tuple[int, int], list[int]] = {}
        for w, ports in enumerate(self.ports):
            for label, u in ports:
                used.setdefault((w, u), []).append(label)
        for v, ports in enumerate(self.ports):
            for label, w in ports:
                if w == v:
                    table[label - 1, v] = label - 1
                    continue
                back = used.get((w, v), [])
                if back:
                    # pair parallel edges in port order
                    k = [lab for lab, u in ports if u == w].index(label)
                    if k < len(back):
                        table[label - 1, v] = back[k] - 1
        return table

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges ``(v, w)`` with ``v <= w``, self-loops included."""
        out = []
        for v, ports in enumerate(self.ports):
            for _, w in ports:
                if v <= w:
                    out.append((v, w))
        return out

    def adjacency(self, self_loops: bool = True) -> np.ndarray:
        """Dense port-count matrix ``A[v, w]``."""
        a = np.zeros((self.vertex_count, self.vertex_count))
        for v, ports in enumerate(self.ports):
            for _, w in ports:
                if w != v or self_loops:
                    a[v, w] += 1
        return a

    def to_json(self) -> str:
        """Adjacency-with-labels export: ``[vertex, label, neighbor]`` triples."""
        triples = [[v, lab, w] for v, ports in enumerate(self.ports) for lab, w in ports]
        doc = {
            "family": self.family,
            "vertex_count": self.vertex_count,
            "max_degree": self.max_degree,
            "ports": triples,
        }
        if self.coords is not None:
            doc["coords"] = [int(c) for c in self.coords]
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> LabeledGraph:
        doc = json.loads(text)
        ports: list[list[Port]] = [[] for _ in range(doc["vertex_count"])]
        for v, lab, w in doc["ports"]:
            ports[v].append((int(lab), int(w)))
        coords = tuple(doc["coords"]) if "coords" in doc else None
        return cls(
            tuple(tuple(sorted(p)) for p in ports),
            int(doc["max_degree"]),
            doc.get("family", "general"),
            coords,
        )


@dataclass(frozen=True)
class LabelingCheck:
    valid: bool
    offenders: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.valid


@dataclass(frozen=True)
class BiasedChain:
    """Birth-death chain on ``0..length-1``.

    ``up[i]`` is the probability of ``i -> i+1`` and ``down[i]`` the
    probability of ``i+1 -> i``.
    """

    length: int
    up: tuple[float, ...]
    down: tuple[float, ...]

    def matrix(self) -> np.ndarray:
        """Column-stochastic transition matrix (``p_next = M @ p``).

        Any probability left over at a state is a hold.
        """
        m = np.zeros((self.length, self.length))
        for i, p in enumerate(self.up):
            m[i + 1, i] = p
        for i, p in enumerate(self.down):
            m[i, i + 1] = p
        m[np.diag_indices(self.length)] = 1.0 - m.sum(axis=0)
        return m


def build_family(family: str, **params) -> LabeledGraph:
    """Construct a labeled graph of a named family.

    Parameters
    ----------
    family : str
        One of ``line-window`` (``W``), ``circle`` (``N``), ``hypercube`` (``d``),
        ``glued-trees`` (``n``) or ``general`` (``edges``, optional ``vertex_count``).

    Raises
    ------
    GraphSizeError
        If a size parameter is out of range.
    """
    if family == "line-window":
        return _line_window(_size(params, "W", 1))
    if family == "circle":
        return _circle(_size(params, "N", 3))
    if family == "hypercube":
        return _hypercube(_size(params, "d", 1))
    if family == "glued-trees":
        return _glued_trees(_size(params, "n", 1))
    if family == "general":
        return from_edges(params["edges"], params.get("vertex_count"))
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def _size(params: dict, key: str, minimum: int) -> int:
    if key not in params:
        raise GraphSizeError(f"missing size parameter {key!r}")
    value = params[key]
    if int(value) != value or value < minimum:
        raise GraphSizeError(f"{key} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _line_window(W: int) -> LabeledGraph:
    n = 2 * W + 1
    ports = []
    for i in range(n):
        p = []
        if i + 1 < n:
            p.append((1, i + 1))
        if i - 1 >= 0:
            p.append((2, i - 1))
        ports.append(tuple(p))
    return LabeledGraph(tuple(ports), 2, "line-window", tuple(range(-W, W + 1)), {"W": W})


def _circle(N: int) -> LabeledGraph:
    ports = tuple(((1, (i + 1) % N), (2, (i - 1) % N)) for i in range(N))
    return LabeledGraph(ports, 2, "circle", None, {"N": N})


def _hypercube(d: int) -> LabeledGraph:
    ports = tuple(
        tuple((j + 1, v ^ (1 << j)) for j in range(d)) for v in range(2**d)
    )
    return LabeledGraph(ports, d, "hypercube", None, {"d": d})


def glued_trees_columns(n: int) -> np.ndarray:
    """Column index ``0..2n`` of every vertex of the glued trees graph."""
    sizes = [2 ** min(j, 2 * n - j) for j in range(2 * n + 1)]
    return np.repeat(np.arange(2 * n + 1), sizes)


def _glued_trees(n: int) -> LabeledGraph:
    sizes = [2 ** min(j, 2 * n - j) for j in range(2 * n + 1)]
    offset = np.concatenate([[0], np.cumsum(sizes)])

    def vid(j: int, k: int) -> int:
        return int(offset[j] + k)

    ports: list[dict[int, int]] = [dict() for _ in range(int(offset[-1]))]

    def link(a: int, b: int, label: int) -> None:
        ports[a][label] = b
        ports[b][label] = a

    # edges share one label at both ends; the right tree uses labels shifted
    # cyclically so that middle-column vertices see two distinct labels
    for side in (0, 1):
        relabel = (lambda x: x) if side == 0 else (lambda x: x % 3 + 1)
        parent_label = {0: None}
        for depth in range(n):
            for k in range(2**depth):
                p = parent_label.get((depth, k)) if depth else None
                free = [lab for lab in (1, 2, 3) if lab != p][:2]
                for b in (0, 1):
                    parent_label[(depth + 1, 2 * k + b)] = free[b]
                    if side == 0:
                        a, c = vid(depth, k), vid(depth + 1, 2 * k + b)
                    else:
                        a, c = vid(2 * n - depth, k), vid(2 * n - depth - 1, 2 * k + b)
                    link(a, c, relabel(free[b]))
    tup = tuple(tuple(sorted(p.items())) for p in ports)
    return LabeledGraph(tup, 3, "glued-trees", None, {"n": n})


def from_edges(
    edges: Iterable[Sequence[int]], vertex_count: int | None = None, family: str = "general"
) -> LabeledGraph:
    """Build a graph from ``(v, w)`` or ``(v, w, label_at_v, label_at_w)`` items.

    Unlabeled edge ends get the next free label at that vertex, in edge order.
    A self-loop ``(v, v)`` occupies a single port.
    """
    edges = [tuple(e) for e in edges]
    if vertex_count is None:
        vertex_count = 1 + max((max(e[0], e[1]) for e in edges), default=-1)
    ports: list[list[Port]] = [[] for _ in range(vertex_count)]

    def next_label(v: int) -> int:
        used = {lab for lab, _ in ports[v]}
        lab = 1
        while lab in used:
            lab += 1
        return lab

    for e in edges:
        v, w = e[0], e[1]
        if not (0 <= v < vertex_count and 0 <= w < vertex_count):
            raise GraphSizeError(f"edge {e} references a vertex outside 0..{vertex_count - 1}")
        lv = e[2] if len(e) > 2 else next_label(v)
        ports[v].append((lv, w))
        if w != v:
            lw = e[3] if len(e) > 3 else next_label(w)
            ports[w].append((lw, v))
    d = max((len(p) for p in ports), default=0)
    d = max(d, max((lab for p in ports for lab, _ in p), default=0))
    return LabeledGraph(tuple(tuple(sorted(p)) for p in ports), d, family)


def complete_graph(n: int) -> LabeledGraph:
    if n < 2:
        raise GraphSizeError("complete graph needs n >= 2")
    return from_edges([(i, j) for i in range(n) for j in range(i + 1, n)], n)


def pad_self_loops(g: LabeledGraph) -> LabeledGraph:
    """Add self-loops until every vertex has ``max_degree`` ports.

    Each loop takes the smallest label unused at its vertex.
    """
    padded = []
    for v, ports in enumerate(g.ports):
        used = {lab for lab, _ in ports}
        extra = [lab for lab in range(1, g.max_degree + 1) if lab not in used]
        extra = extra[: g.max_degree - len(ports)]
        padded.append(tuple(sorted(ports + tuple((lab, v) for lab in extra))))
    return LabeledGraph(tuple(padded), g.max_degree, g.family, g.coords, dict(g.params))


def validate_labeling(g: LabeledGraph) -> LabelingCheck:
    """Check distinct in-range labels per vertex and a reverse port for every port."""
    bad = set()
    counts: dict[tuple[int, int], int] = {}
    for v, ports in enumerate(g.ports):
        labels = [lab for lab, _ in ports]
        if len(set(labels)) != len(labels) or any(not 1 <= lab <= g.max_degree for lab in labels):
            bad.add(v)
        for _, w in ports:
            if not 0 <= w < g.vertex_count:
                bad.add(v)
                continue
            counts[(v, w)] = counts.get((v, w), 0) + 1
    for (v, w), c in counts.items():
        if v != w and counts.get((w, v), 0) != c:
            bad.add(v)
    return LabelingCheck(not bad, tuple(sorted(bad)))


def reduce_hypercube_chain(d: int) -> BiasedChain:
    """Hamming-weight chain of the simple walk on the ``d``-cube."""
    if d < 1:
        raise GraphSizeError("hypercube dimension must be >= 1")
    up = tuple((d - i) / d for i in range(d))
    down = tuple((i + 1) / d for i in range(d))
    return BiasedChain(d + 1, up, down)


def reduce_glued_trees_generator(n: int, gamma: float = 1.0) -> Generator:
    """Generator of the glued trees walk restricted to column-uniform states."""
    if n < 1:
        raise GraphSizeError("glued trees depth must be >= 1")
    size = 2 * n + 1
    diag = np.full(size, 3.0 * gamma)
    diag[[0, n, 2 * n]] = 2.0 * gamma
    h = np.diag(diag)
    off = -np.sqrt(2.0) * gamma
    idx = np.arange(size - 1)
    h[idx, idx + 1] = off
    h[idx + 1, idx] = off
    return Generator(h, gamma)
