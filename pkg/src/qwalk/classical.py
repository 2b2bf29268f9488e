"""Classical random walks and Markov chain analysis.

Transition matrices are column-stochastic: ``M[i, j]`` is the probability of
moving from ``j`` to ``i``, so a distribution evolves as ``p_next = M @ p``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .distribution import Distribution
from .dtqw import AbsorptionRecord
from .graph import BiasedChain, LabeledGraph

__all__ = [
    "StochasticMatrix",
    "Spectrum",
    "CnfFormula",
    "TwoSatResult",
    "ClassicalWalk",
    "transition_matrix",
    "chain_matrix",
    "evolve_classical",
    "stationary_and_gap",
    "mixing_bounds",
    "expected_hitting",
    "absorbing_walk",
    "line_absorbing",
    "two_sat_walk",
    "random_planted_2sat",
    "parse_dimacs",
    "st_connectivity",
]


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    matrix: np.ndarray
    support: np.ndarray | None = None

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(m < 0):
            raise ValueError("transition probabilities must be nonnegative")
        if not np.allclose(m.sum(axis=0), 1.0, atol=1e-12):
            raise ValueError("columns must sum to 1")
        object.__setattr__(self, "matrix", m)
        support = np.arange(m.shape[0]) if self.support is None else np.asarray(self.support)
        object.__setattr__(self, "support", support)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def transition_matrix(g: LabeledGraph) -> StochasticMatrix:
    """Simple random walk: each port (self-loops included) is taken with prob ``1/deg``."""
    a = g.adjacency(self_loops=True)
    deg = a.sum(axis=1)
    if np.any(deg == 0):
        raise ValueError(f"isolated vertex {int(np.flatnonzero(deg == 0)[0])}")
    return StochasticMatrix((a / deg[:, None]).T, g.coordinates)


def chain_matrix(chain: BiasedChain) -> StochasticMatrix:
    return StochasticMatrix(chain.matrix())


def _as_vector(m: StochasticMatrix, p0) -> np.ndarray:
    vec = p0.values if isinstance(p0, Distribution) else np.asarray(p0, dtype=float)
    if vec.shape != (m.dim,):
        raise ValueError(f"distribution has {vec.size} entries, chain has {m.dim} states")
    return vec


def evolve_classical(m: StochasticMatrix, p0, T: int) -> Distribution:
    """``M^T @ p0``."""
    p = _as_vector(m, p0).copy()
    for _ in range(T):
        p = m.matrix @ p
    return Distribution(m.support, p)


class Spectrum(NamedTuple):
    stationary: Distribution
    lambda2: float
    lambda_star: float
    bipartite: bool


def _is_bipartite(m: np.ndarray) -> bool:
    adj = (m > 0) | (m.T > 0)
    colour = np.full(m.shape[0], -1)
    for root in range(m.shape[0]):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        queue = deque([root])
        while queue:
            v = queue.popleft()
            for w in np.flatnonzero(adj[v]):
                if colour[w] < 0:
                    colour[w] = 1 - colour[v]
                    queue.append(w)
                elif colour[w] == colour[v]:
                    return False
    return True


def stationary_and_gap(m: StochasticMatrix) -> Spectrum:
    """Stationary distribution and second eigenvalues of ``M``.

    ``lambda2`` is the second largest signed eigenvalue; ``lambda_star`` the
    second largest modulus. Bipartite chains are flagged; they have a
    stationary distribution but do not converge to it.
    """
    evals, evecs = np.linalg.eig(m.matrix)
    k = int(np.argmin(np.abs(evals - 1.0)))
    pi = np.abs(evecs[:, k].real)
    pi /= pi.sum()
    rest = np.delete(evals, k)
    lambda2 = float(np.max(rest.real)) if rest.size else 0.0
    lambda_star = float(np.max(np.abs(rest))) if rest.size else 0.0
    return Spectrum(Distribution(m.support, pi), lambda2, lambda_star, _is_bipartite(m.matrix))


def mixing_bounds(lam: float, pi, eps: float) -> tuple[float, float]:
    """Eigenvalue bracket on the mixing time for second eigenvalue ``lam``.

    ``lower = lam / (1 - lam) * log(1 / (2 eps))`` and
    ``upper = (max_i log(1 / pi_i) + log(1 / eps)) / (1 - lam)``.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if lam >= 1.0 - 1e-12:
        raise ValueError("second eigenvalue is 1: the chain is disconnected")
    values = pi.values if isinstance(pi, Distribution) else np.asarray(pi, dtype=float)
    lower = lam / (1.0 - lam) * np.log(1.0 / (2.0 * eps))
    upper = (np.max(np.log(1.0 / values)) + np.log(1.0 / eps)) / (1.0 - lam)
    return float(lower), float(upper)


def expected_hitting(m: StochasticMatrix, s: int, t: int) -> float:
    """Expected number of steps to first reach state ``t`` from ``s``."""
    if s == t:
        return 0.0
    p = m.matrix.T  # p[v, w] = P(v -> w)
    keep = np.array([v for v in range(m.dim) if v != t])
    a = np.eye(keep.size) - p[np.ix_(keep, keep)]
    try:
        h = np.linalg.solve(a, np.ones(keep.size))
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"state {t} is not reachable") from exc
    if not np.all(np.isfinite(h)) or np.linalg.cond(a) > 1e14:
        raise ValueError(f"state {t} is not reachable")
    return float(h[np.searchsorted(keep, s)])


def absorbing_walk(m: StochasticMatrix, p0, boundaries, T: int) -> AbsorptionRecord:
    """Classical counterpart of :func:`qwalk.dtqw.run_absorbing`."""
    bounds = np.array(sorted(set(int(b) for b in boundaries)), dtype=np.int64)
    p = _as_vector(m, p0).copy()
    absorbed = np.zeros(T + 1)
    residual = np.empty(T + 1)
    residual[0] = p.sum()
    for t in range(1, T + 1):
        p = m.matrix @ p
        absorbed[t] = p[bounds].sum()
        p[bounds] = 0.0
        residual[t] = residual[t - 1] - absorbed[t]
    return AbsorptionRecord(absorbed, np.cumsum(absorbed), residual, Distribution(m.support, p))


def line_absorbing(start: int, boundaries, T: int) -> AbsorptionRecord:
    """Unbiased walk on the integers from ``start``, absorbed at ``boundaries``.

    Boundaries are integer coordinates. Equivalent to :func:`absorbing_walk`
    on a line window wide enough never to be reached, without the dense
    matrix.
    """
    bounds = np.array(sorted(set(int(b) for b in boundaries)), dtype=np.int64)
    if start in set(bounds.tolist()):
        raise ValueError("start lies on a boundary")
    W = abs(start) + T + 1
    coords = np.arange(-W, W + 1)
    idx = bounds[np.abs(bounds) <= W] + W
    p = np.zeros(coords.size)
    p[start + W] = 1.0
    absorbed = np.zeros(T + 1)
    residual = np.empty(T + 1)
    residual[0] = 1.0
    for t in range(1, T + 1):
        nxt = np.zeros_like(p)
        nxt[1:] += 0.5 * p[:-1]
        nxt[:-1] += 0.5 * p[1:]
        p = nxt
        absorbed[t] = p[idx].sum()
        p[idx] = 0.0
        residual[t] = residual[t - 1] - absorbed[t]
    return AbsorptionRecord(absorbed, np.cumsum(absorbed), residual, Distribution(coords, p))


@dataclass
class ClassicalWalk:
    """Markov chain plus start distribution, usable as a distribution source."""

    chain: StochasticMatrix
    start: Distribution
    quantum: bool = field(default=False, init=False)

    @property
    def support(self) -> np.ndarray:
        return self.chain.support

    def distributions(self, t_max: int) -> Iterator[Distribution]:
        p = _as_vector(self.chain, self.start).copy()
        yield Distribution(self.chain.support, p)
        for _ in range(t_max):
            p = self.chain.matrix @ p
            yield Distribution(self.chain.support, p)

    def absorbing(self, boundaries, T: int) -> AbsorptionRecord:
        return absorbing_walk(self.chain, self.start, boundaries, T)


# --- 2-SAT -----------------------------------------------------------------


@dataclass(frozen=True)
class CnfFormula:
    """Conjunction of 2-literal clauses over variables ``1..n``.

    A literal is a signed variable index. ``true_value`` is the bit value that
    makes an unnegated literal true (1 in the usual convention).
    """

    n: int
    clauses: tuple[tuple[int, int], ...]
    true_value: int = 1

    def __post_init__(self) -> None:
        clauses = tuple(tuple(int(x) for x in c) for c in self.clauses)
        for c in clauses:
            if len(c) != 2:
                raise ValueError(f"clause {c} does not have exactly 2 literals")
            if any(x == 0 or abs(x) > self.n for x in c):
                raise ValueError(f"clause {c} references a variable outside 1..{self.n}")
        if self.true_value not in (0, 1):
            raise ValueError("true_value must be 0 or 1")
        object.__setattr__(self, "clauses", clauses)

    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lits = np.array(self.clauses, dtype=np.int64).reshape(-1, 2)
        var = np.abs(lits) - 1
        want = np.where(lits > 0, self.true_value, 1 - self.true_value)
        return var, want

    def satisfied_clauses(self, assignment: Sequence[int]) -> np.ndarray:
        var, want = self._arrays()
        bits = np.asarray(assignment)
        return np.any(bits[var] == want, axis=1)

    def is_satisfied(self, assignment: Sequence[int]) -> bool:
        return bool(np.all(self.satisfied_clauses(assignment)))

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n} {len(self.clauses)}"]
        lines += [f"{a} {b} 0" for a, b in self.clauses]
        return "\n".join(lines) + "\n"


class TwoSatResult(NamedTuple):
    """``assignment`` is ``None`` when no satisfying assignment was found."""

    assignment: tuple[int, ...] | None
    flips: int

    @property
    def satisfied(self) -> bool:
        return self.assignment is not None


def two_sat_walk(f: CnfFormula, rng, max_steps: int) -> TwoSatResult:
    """Random-walk 2-SAT search.

    Start from a uniformly random assignment. While some clause is
    unsatisfied, take the first unsatisfied clause (by index) and flip one of
    its two variables chosen uniformly. Give up after ``max_steps`` flips.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    rng = np.random.default_rng(rng)
    var, want = f._arrays()
    bits = rng.integers(0, 2, size=f.n)
    for flips in range(max_steps + 1):
        sat = np.any(bits[var] == want, axis=1)
        if sat.all():
            return TwoSatResult(tuple(int(b) for b in bits), flips)
        if flips == max_steps:
            break
        c = int(np.argmin(sat))
        v = var[c, rng.integers(0, 2)]
        bits[v] ^= 1
    return TwoSatResult(None, max_steps)


def random_planted_2sat(n: int, m: int, rng, true_value: int = 1) -> tuple[CnfFormula, tuple[int, ...]]:
    """Random satisfiable formula: ``m`` clauses all satisfied by a hidden assignment."""
    rng = np.random.default_rng(rng)
    planted = rng.integers(0, 2, size=n)
    clauses = []
    while len(clauses) < m:
        a, b = rng.choice(n, size=2, replace=False)
        signs = rng.choice([-1, 1], size=2)
        clause = (int(signs[0] * (a + 1)), int(signs[1] * (b + 1)))
        f = CnfFormula(n, (clause,), true_value)
        if f.is_satisfied(planted):
            clauses.append(clause)
    return CnfFormula(n, tuple(clauses), true_value), tuple(int(x) for x in planted)


def parse_dimacs(text: str, true_value: int = 1) -> CnfFormula:
    """Parse ``p cnf n m`` followed by zero-terminated 2-literal clauses."""
    n = m = None
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad header line: {raw!r}")
            n, m = int(parts[2]), int(parts[3])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(tuple(pending))
                pending = []
            else:
                pending.append(lit)
    if n is None:
        raise ValueError("missing 'p cnf' header")
    if pending:
        raise ValueError("last clause is not zero-terminated")
    if m != len(clauses):
        raise ValueError(f"header announces {m} clauses, found {len(clauses)}")
    return CnfFormula(n, tuple(clauses), true_value)


# --- s-t connectivity ------------------------------------------------------


def st_connectivity(g: LabeledGraph, s: int, t: int, rng, steps: int | None = None) -> bool:
    """Random-walk connectivity test.

    Walk from ``s`` for ``|V|**3`` steps (or ``steps``); answer True on
    visiting ``t``. A True answer is always correct; False may be wrong with
    probability at most about 1/2 when ``s`` and ``t`` are connected.
    """
    if s == t:
        return True
    rng = np.random.default_rng(rng)
    steps = g.vertex_count**3 if steps is None else steps
    nbrs = [g.neighbors(v) for v in range(g.vertex_count)]
    v, done = s, 0
    chunk = 4096
    while done < steps:
        draws = rng.random(min(chunk, steps - done))
        for u in draws:
            choices = nbrs[v]
            if choices:
                v = choices[int(u * len(choices))]
            if v == t:
                return True
        done += draws.size
    return False
