"""Continuous-time walks driven by a graph generator.

The quantum walk evolves amplitudes with ``exp(-iHt)``; the classical walk
evolves probabilities with ``exp(-Ht)``. Both use the spectral decomposition of
the real symmetric generator, so there is no time-stepping error.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .distribution import Distribution, TimeSeries

if TYPE_CHECKING:
    from .graph import LabeledGraph

__all__ = [
    "Generator",
    "generator_from_graph",
    "evolve_quantum",
    "evolve_classical_ct",
    "glued_trees_arrival",
    "glued_trees_arrival_full",
    "glued_trees_classical_columns",
    "glued_trees_average_arrival",
    "cesaro_ct",
]


@dataclass(frozen=True, eq=False)
class Generator:
    """Real symmetric generator matrix of a continuous-time walk."""

    matrix: np.ndarray
    gamma: float = 1.0

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("generator must be a square matrix")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        if not np.allclose(self.matrix, self.matrix.T, atol=1e-12):
            raise np.linalg.LinAlgError("generator is not symmetric")
        return np.linalg.eigh(self.matrix)


def generator_from_graph(g: LabeledGraph, gamma: float = 1.0) -> Generator:
    """``H[i, j] = -gamma`` on edges, ``deg(i) * gamma`` on the diagonal.

    Self-loops are not transitions and are ignored.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    a = g.adjacency(self_loops=False)
    h = -gamma * a
    h[np.diag_indices(g.vertex_count)] = gamma * a.sum(axis=1)
    return Generator(h, gamma)


def _propagate(h: Generator, vec: np.ndarray, t, factor) -> np.ndarray:
    evals, evecs = h.spectrum
    coeffs = evecs.T @ vec
    ts = np.asarray(t, dtype=float)
    phases = factor(np.multiply.outer(ts, evals))
    return (phases * coeffs) @ evecs.T


def evolve_quantum(h: Generator, initial, t) -> np.ndarray:
    """Amplitudes ``exp(-iHt) @ initial``.

    ``t`` may be a scalar or an array of times; for an array the result has
    one row per time.
    """
    psi = np.asarray(initial, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"initial state is not normalized (norm {norm})")
    return _propagate(h, psi, t, lambda x: np.exp(-1j * x))


def evolve_classical_ct(h: Generator, p0, t) -> Distribution:
    """Probability vector ``exp(-Ht) @ p0`` for a scalar time ``t``."""
    if isinstance(p0, Distribution):
        support, vec = p0.support, p0.values
    else:
        vec = np.asarray(p0, dtype=float)
        support = np.arange(vec.size)
    out = _propagate(h, vec, float(t), lambda x: np.exp(-x))
    return Distribution(support, np.clip(out.real, 0.0, None))


def glued_trees_arrival(n: int, gamma: float = 1.0, t_grid=None) -> TimeSeries:
    """Probability of finding the quantum walker at the right root over time.

    Evolves the ``2n+1`` column states from the left root.
    """
    from .graph import reduce_glued_trees_generator

    t_grid = np.linspace(0.0, 10.0 * n, 401) if t_grid is None else np.asarray(t_grid, float)
    h = reduce_glued_trees_generator(n, gamma)
    start = np.zeros(h.dim)
    start[0] = 1.0
    amps = evolve_quantum(h, start, t_grid)
    return TimeSeries(t_grid, np.abs(amps[:, -1]) ** 2, "p_right_root")


def glued_trees_arrival_full(n: int, gamma: float = 1.0, t_grid=None) -> TimeSeries:
    """Same series as :func:`glued_trees_arrival`, on the full graph."""
    from .graph import build_family

    t_grid = np.linspace(0.0, 10.0 * n, 401) if t_grid is None else np.asarray(t_grid, float)
    g = build_family("glued-trees", n=n)
    h = generator_from_graph(g, gamma)
    start = np.zeros(h.dim)
    start[0] = 1.0
    amps = evolve_quantum(h, start, t_grid)
    return TimeSeries(t_grid, np.abs(amps[:, -1]) ** 2, "p_right_root")


def glued_trees_classical_columns(n: int, gamma: float = 1.0) -> np.ndarray:
    """Rate matrix ``Q`` of the classical column process: ``dP/dt = Q @ P``.

    Each edge fires at rate ``gamma``; a vertex in column ``j`` has
    ``up[j]`` edges toward column ``j+1`` and ``down[j]`` toward ``j-1``.
    """
    size = 2 * n + 1
    q = np.zeros((size, size))
    for j in range(size):
        up = 2 if j < n else (1 if j < 2 * n else 0)
        down = 0 if j == 0 else (1 if j <= n else 2)
        if up:
            q[j + 1, j] += up * gamma
        if down:
            q[j - 1, j] += down * gamma
        q[j, j] -= (up + down) * gamma
    return q


def glued_trees_average_arrival(
    n: int, eps: float, gamma: float = 1.0, points: int = 10_000
) -> float:
    """Mean right-root probability for a uniformly random time in ``[0, n**4/(2 eps)]``.

    The uniform time average is approximated by a uniform grid of ``points``.
    """
    t_grid = np.linspace(0.0, n**4 / (2.0 * eps), points)
    return float(glued_trees_arrival(n, gamma, t_grid).values.mean())


def cesaro_ct(h: Generator, initial, t_grid) -> np.ndarray:
    """Running time-average of the quantum position distribution on ``t_grid``.

    Returns one averaged distribution per grid point, using the trapezoid rule
    from the first grid point.
    """
    amps = evolve_quantum(h, initial, t_grid)
    probs = np.abs(amps) ** 2
    t = np.asarray(t_grid, float)
    out = np.empty_like(probs)
    out[0] = probs[0]
    area = np.zeros(probs.shape[1])
    for k in range(1, t.size):
        area += 0.5 * (probs[k] + probs[k - 1]) * (t[k] - t[k - 1])
        out[k] = area / (t[k] - t[0])
    return out
