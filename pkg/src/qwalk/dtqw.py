"""Discrete-time coined quantum walk: exact amplitude evolution.

A state is an array of amplitudes indexed ``[direction, vertex]``, where
direction ``j`` points along the port labeled ``j + 1``. One step applies the
coin at every vertex and then the conditional shift. With the default
``shift="keep"`` a walker leaving ``v`` through label ``j`` arrives at ``w``
still pointing along ``j``; ``shift="flip-flop"`` instead sets the direction
to the label of the arrival port at ``w``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence, Union

import numpy as np

from .coin import Coin
from .distribution import Distribution
from .graph import LabeledGraph

__all__ = [
    "WindowOverflowError",
    "CoinDegreeError",
    "WalkState",
    "AbsorptionRecord",
    "QuantumWalk",
    "initial_state",
    "step",
    "evolve",
    "iter_states",
    "position_distribution",
    "run_absorbing",
    "measure",
    "walk_unitary",
    "line_walk",
]

CoinMap = Union[Coin, np.ndarray, Mapping[int, Coin], Sequence[Coin], Callable[[int], Coin]]


class WindowOverflowError(RuntimeError):
    """Amplitude reached the edge of a finite line window."""


class CoinDegreeError(ValueError):
    """A vertex's coin dimension does not match its degree."""


@dataclass(frozen=True, eq=False)
class WalkState:
    graph: LabeledGraph
    amplitudes: np.ndarray

    @property
    def coin_dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def mass(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def amplitude(self, label: int, coord) -> complex:
        """Amplitude of direction ``label`` (1-based) at line coordinate/vertex ``coord``."""
        return complex(self.amplitudes[label - 1, self.graph.index_of(coord)])


@dataclass(frozen=True)
class AbsorptionRecord:
    """Exact absorbed mass of an absorbing-boundary run.

    Arrays are indexed by step ``t = 0..T``; entry 0 is the state before any
    step.
    """

    per_step_absorbed: np.ndarray
    cumulative: np.ndarray
    residual: np.ndarray
    final_state: object = None

    @property
    def residual_mass(self) -> float:
        return float(self.residual[-1])


def initial_state(g: LabeledGraph, v: int, coin_amplitudes: Sequence[complex]) -> WalkState:
    """Walker localized at vertex ``v`` with the given coin amplitudes."""
    coin = np.asarray(coin_amplitudes, dtype=complex)
    if coin.shape != (g.max_degree,):
        raise ValueError(f"expected {g.max_degree} coin amplitudes, got {coin.shape}")
    if abs(np.linalg.norm(coin) - 1.0) > 1e-10:
        raise ValueError("coin amplitudes are not normalized")
    if not 0 <= v < g.vertex_count:
        raise IndexError(f"vertex {v} out of range")
    amps = np.zeros((g.max_degree, g.vertex_count), dtype=complex)
    amps[:, v] = coin
    return WalkState(g, amps)


def line_walk(W: int, position: int, coin_amplitudes: Sequence[complex]) -> WalkState:
    """Localized state on the line window ``-W..W`` at coordinate ``position``."""
    from .graph import build_family

    g = build_family("line-window", W=W)
    return initial_state(g, g.index_of(position), coin_amplitudes)


# --- operators -------------------------------------------------------------

_SHIFT_CACHE: "weakref.WeakKeyDictionary[LabeledGraph, dict]" = weakref.WeakKeyDictionary()


def _shift_table(g: LabeledGraph, mode: str) -> np.ndarray:
    """Flat destination index of each ``(direction, vertex)`` slot, -1 if none."""
    cache = _SHIFT_CACHE.setdefault(g, {})
    if mode in cache:
        return cache[mode]
    n, d = g.vertex_count, g.max_degree
    nbr = g.neighbor_table
    if mode == "keep":
        new_dir = np.repeat(np.arange(d)[:, None], n, axis=1)
    elif mode == "flip-flop":
        new_dir = g.reverse_label_table
    else:
        raise ValueError(f"unknown shift mode {mode!r}")
    dest = np.where((nbr >= 0) & (new_dir >= 0), new_dir * n + nbr, -1).ravel()
    used = dest[dest >= 0]
    if np.unique(used).size != used.size:
        raise ValueError(
            f"shift {mode!r} is not a permutation on this labeling; "
            "use equal labels on both edge ends or shift='flip-flop'"
        )
    cache[mode] = dest
    return dest


def _coin_operator(g: LabeledGraph, coin_map: CoinMap) -> np.ndarray:
    """Either a single ``(d, d)`` matrix or a stack ``(n, d, d)``."""
    d = g.max_degree
    if isinstance(coin_map, (Coin, np.ndarray)):
        m = np.asarray(coin_map, dtype=complex)
        if m.ndim == 2:
            if m.shape != (d, d):
                raise CoinDegreeError(f"coin is {m.shape[0]}-dimensional, graph degree is {d}")
            if g.family != "line-window":
                for v in range(g.vertex_count):
                    if g.degree(v) != d:
                        raise CoinDegreeError(
                            f"vertex {v} has degree {g.degree(v)} but the coin has dimension {d}"
                        )
            return m
        coins = m
    else:
        if callable(coin_map) and not isinstance(coin_map, Mapping):
            getter = coin_map
        else:
            getter = coin_map.__getitem__
        coins = [np.asarray(getter(v), dtype=complex) for v in range(g.vertex_count)]
    stack = np.zeros((g.vertex_count, d, d), dtype=complex)
    for v in range(g.vertex_count):
        c = np.asarray(coins[v], dtype=complex)
        if c.shape == (d, d) and g.family == "line-window":
            stack[v] = c
            continue
        slots = [lab - 1 for lab in g.labels(v)]
        if c.shape != (len(slots), len(slots)):
            raise CoinDegreeError(
                f"vertex {v} has degree {len(slots)} but its coin has shape {c.shape}"
            )
        stack[v] = np.eye(d)
        stack[v][np.ix_(slots, slots)] = c
    return stack


def _apply(amps: np.ndarray, coin: np.ndarray, dest: np.ndarray) -> np.ndarray:
    if coin.ndim == 2:
        flipped = coin @ amps
    else:
        flipped = np.einsum("vij,jv->iv", coin, amps)
    flat = flipped.ravel()
    stray = dest < 0
    if np.any(flat[stray] != 0):
        raise WindowOverflowError("walk support reached the edge of the window; enlarge W")
    out = np.zeros_like(flat)
    out[dest[~stray]] = flat[~stray]
    return out.reshape(amps.shape)


def step(s: WalkState, coin_map: CoinMap, shift: str = "keep") -> WalkState:
    """One coin flip followed by the conditional shift."""
    coin = _coin_operator(s.graph, coin_map)
    return WalkState(s.graph, _apply(s.amplitudes, coin, _shift_table(s.graph, shift)))


def iter_states(s: WalkState, coin_map: CoinMap, T: int, shift: str = "keep") -> Iterator[WalkState]:
    """Yield the states after steps ``1..T``."""
    coin = _coin_operator(s.graph, coin_map)
    dest = _shift_table(s.graph, shift)
    amps = s.amplitudes
    for _ in range(T):
        amps = _apply(amps, coin, dest)
        yield WalkState(s.graph, amps)


def evolve(s: WalkState, coin_map: CoinMap, T: int, shift: str = "keep") -> WalkState:
    """Apply ``T`` steps; raises :class:`WindowOverflowError` if a line window is too small."""
    if T < 0:
        raise ValueError("T must be >= 0")
    out = s
    for out in iter_states(s, coin_map, T, shift):
        pass
    return out


def position_distribution(s: WalkState) -> Distribution:
    probs = np.sum(np.abs(s.amplitudes) ** 2, axis=0)
    return Distribution(s.graph.coordinates, probs)


def run_absorbing(
    s: WalkState,
    coin_map: CoinMap,
    boundaries,
    T: int = 100_000,
    shift: str = "keep",
) -> AbsorptionRecord:
    """Walk with a partial measurement at ``boundaries`` after every step.

    The residual state is kept unnormalized, so the absorbed mass per step is
    exact rather than sampled.
    """
    bounds = np.array(sorted(set(int(b) for b in boundaries)), dtype=np.int64)
    if bounds.size == 0:
        raise ValueError("at least one boundary vertex is required")
    if np.any(s.amplitudes[:, bounds] != 0):
        raise ValueError("start state has amplitude on a boundary vertex")
    coin = _coin_operator(s.graph, coin_map)
    dest = _shift_table(s.graph, shift)
    absorbed = np.zeros(T + 1)
    residual = np.empty(T + 1)
    residual[0] = s.mass
    amps = s.amplitudes.copy()
    if coin.ndim == 2 and s.graph.family == "line-window" and shift == "keep":
        amps = _absorbing_line(amps, coin, bounds, absorbed, residual, T)
    else:
        for t in range(1, T + 1):
            amps = _apply(amps, coin, dest)
            hit = amps[:, bounds]
            absorbed[t] = float(np.sum(np.abs(hit) ** 2))
            amps[:, bounds] = 0
            residual[t] = residual[t - 1] - absorbed[t]
    return AbsorptionRecord(absorbed, np.cumsum(absorbed), residual, WalkState(s.graph, amps))


def _absorbing_line(amps, coin, bounds, absorbed, residual, T):
    # Line window fast path: only touch the active support, which grows by
    # one site per step on each side.
    n = amps.shape[1]
    nz = np.flatnonzero(np.any(amps != 0, axis=0))
    lo, hi = int(nz.min()), int(nz.max())
    for t in range(1, T + 1):
        a, b = max(lo - 1, 0), min(hi + 1, n - 1)
        block = coin @ amps[:, lo : hi + 1]
        if (lo == 0 and block[1, 0] != 0) or (hi == n - 1 and block[0, -1] != 0):
            raise WindowOverflowError("walk support reached the edge of the window; enlarge W")
        amps[:, a : b + 1] = 0
        up_lo, up_hi = lo + 1, min(hi + 1, n - 1)
        amps[0, up_lo : up_hi + 1] = block[0, : up_hi - lo]
        dn_lo = max(lo - 1, 0)
        amps[1, dn_lo : hi] = block[1, dn_lo - lo + 1 :]
        hit = amps[:, bounds]
        absorbed[t] = float(np.sum(np.abs(hit) ** 2))
        amps[:, bounds] = 0
        residual[t] = residual[t - 1] - absorbed[t]
        lo, hi = a, b
    return amps


def measure(s: WalkState, register: str, rng) -> tuple[int, WalkState]:
    """Projective measurement of the ``coin`` or ``position`` register.

    Returns the outcome (coin label, or position coordinate) and the
    renormalized post-measurement state.
    """
    if abs(s.mass - 1.0) > 1e-10:
        raise ValueError(f"measurement needs a normalized state (mass {s.mass})")
    rng = np.random.default_rng(rng)
    weights = np.abs(s.amplitudes) ** 2
    if register == "coin":
        probs = weights.sum(axis=1)
    elif register == "position":
        probs = weights.sum(axis=0)
    else:
        raise ValueError(f"register must be 'coin' or 'position', got {register!r}")
    k = int(rng.choice(probs.size, p=probs / probs.sum()))
    post = np.zeros_like(s.amplitudes)
    if register == "coin":
        post[k] = s.amplitudes[k] / np.sqrt(probs[k])
        outcome = k + 1
    else:
        post[:, k] = s.amplitudes[:, k] / np.sqrt(probs[k])
        outcome = s.graph.coordinates[k].item()
    return outcome, WalkState(s.graph, post)


def walk_unitary(g: LabeledGraph, coin_map: CoinMap, shift: str = "keep") -> np.ndarray:
    """Dense matrix of one step, acting on flattened ``[direction, vertex]`` vectors."""
    dest = _shift_table(g, shift)
    if np.any(dest < 0):
        raise ValueError("the walk on this graph is not unitary (missing ports); pad self-loops")
    coin = _coin_operator(g, coin_map)
    n, d = g.vertex_count, g.max_degree
    if coin.ndim == 2:
        c_full = np.kron(coin, np.eye(n))
    else:
        c_full = np.zeros((d * n, d * n), dtype=complex)
        for v in range(n):
            idx = np.arange(d) * n + v
            c_full[np.ix_(idx, idx)] = coin[v]
    u = np.zeros((d * n, d * n), dtype=complex)
    u[dest, :] = c_full
    return u


@dataclass
class QuantumWalk:
    """A coined walk bundled with its coin, usable as a distribution source."""

    state: WalkState
    coin_map: CoinMap
    shift: str = "keep"
    quantum: bool = field(default=True, init=False)

    @property
    def support(self) -> np.ndarray:
        return self.state.graph.coordinates

    def distributions(self, t_max: int) -> Iterator[Distribution]:
        """Position distributions at ``t = 0..t_max``."""
        yield position_distribution(self.state)
        for s in iter_states(self.state, self.coin_map, t_max, self.shift):
            yield position_distribution(s)

    def absorbing(self, boundaries, T: int) -> AbsorptionRecord:
        return run_absorbing(self.state, self.coin_map, boundaries, T, self.shift)
