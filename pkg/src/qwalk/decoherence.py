"""Interpolating between the quantum and classical coined walk.

Each step applies the walk unitary and then, with probability ``p_meas``,
projectively measures the coin, the position, or both. Two evaluations are
offered: seeded Monte Carlo over pure-state trajectories, and exact evolution
of the density matrix under the averaged channel

    rho -> (1 - p) U rho U^dagger + p sum_k P_k U rho U^dagger P_k.

The multi-coin walk keeps ``M`` coin registers and flips them round-robin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coin import Coin, make_coin
from .distribution import Distribution, TimeSeries, rows_to_csv
from .dtqw import CoinMap, WalkState, WindowOverflowError, _coin_operator, _shift_table

__all__ = [
    "ResourceCapError",
    "DecoherenceSpec",
    "DecoherenceResult",
    "DensityState",
    "decohered_run",
    "exact_channel_run",
    "multicoin_run",
    "channel_states",
    "variance_sweep",
    "sweep_csv",
    "SWEEP_HEADER",
    "MAX_CHANNEL_POSITIONS",
    "MAX_MULTICOIN_AMPLITUDES",
]

MAX_CHANNEL_POSITIONS = 512
MAX_MULTICOIN_AMPLITUDES = 2**22
TARGETS = ("coin", "position", "both")
SWEEP_HEADER = ("p_meas", "T", "variance", "exponent")


class ResourceCapError(RuntimeError):
    """The requested run would exceed a configured memory cap."""


@dataclass(frozen=True)
class DecoherenceSpec:
    p_meas: float
    target: str = "coin"
    mode: str = "trajectories"
    trajectories: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_meas <= 1.0:
            raise ValueError("p_meas must lie in [0, 1]")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}")
        if self.mode not in ("trajectories", "exact"):
            raise ValueError("mode must be 'trajectories' or 'exact'")
        if self.mode == "trajectories" and self.trajectories < 1:
            raise ValueError("need at least one trajectory")


@dataclass(frozen=True)
class DecoherenceResult:
    """Final position distribution and its variance after every step.

    For trajectory runs ``trajectory_moments`` holds each trajectory's final
    ``(<x>, <x^2>)``, from which standard errors follow.
    """

    distribution: Distribution
    variance: TimeSeries
    trajectory_moments: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class DensityState:
    """Density matrix over flattened ``[direction, vertex]`` indices."""

    graph: object
    rho: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def position_probabilities(self) -> np.ndarray:
        d = self.rho.shape[0] // self.graph.vertex_count
        return np.diag(self.rho).real.reshape(d, -1).sum(axis=0)

    def check(self, tol: float = 1e-9) -> None:
        if np.max(np.abs(self.rho - self.rho.conj().T)) > tol:
            raise AssertionError("density matrix is not Hermitian")
        if abs(self.trace - 1.0) > tol:
            raise AssertionError(f"trace {self.trace} != 1")
        if np.linalg.eigvalsh(self.rho).min() < -1e-8:
            raise AssertionError("density matrix is not positive semidefinite")


def _variance(coords: np.ndarray, probs: np.ndarray) -> float:
    mass = probs.sum()
    mean = np.dot(probs, coords) / mass
    return float(np.dot(probs, (coords - mean) ** 2) / mass)


def decohered_run(start: WalkState, coin_map: CoinMap, spec: DecoherenceSpec, T: int,
                  shift: str = "keep") -> DecoherenceResult:
    """Trajectory-averaged walk with random projective measurements.

    All trajectories are evolved together; the run is a deterministic function
    of ``spec.seed``.
    """
    if spec.mode != "trajectories":
        return exact_channel_run(start, coin_map, spec, T, shift)
    g = start.graph
    coin = _coin_operator(g, coin_map)
    dest = _shift_table(g, shift)
    valid = dest >= 0
    d, n = start.amplitudes.shape
    R = spec.trajectories
    rng = np.random.default_rng(spec.seed)
    coords = g.coordinates.astype(float)
    amps = np.repeat(start.amplitudes[None], R, axis=0)
    variance = np.empty(T)
    for t in range(T):
        if coin.ndim == 2:
            amps = np.einsum("ij,rjv->riv", coin, amps)
        else:
            amps = np.einsum("vij,rjv->riv", coin, amps)
        flat = amps.reshape(R, d * n)
        if np.any(flat[:, ~valid] != 0):
            raise WindowOverflowError("walk support reached the edge of the window; enlarge W")
        moved = np.zeros_like(flat)
        moved[:, dest[valid]] = flat[:, valid]
        amps = moved.reshape(R, d, n)
        hit = rng.random(R) < spec.p_meas
        draws = rng.random(R)
        if spec.p_meas > 0 and np.any(hit):
            amps[hit] = _collapse(amps[hit], spec.target, draws[hit])
        probs = (np.abs(amps) ** 2).sum(axis=1).mean(axis=0)
        variance[t] = _variance(coords, probs)
    pos = (np.abs(amps) ** 2).sum(axis=1)
    moments = np.stack([pos @ coords, pos @ coords**2], axis=1)
    return DecoherenceResult(
        Distribution(g.coordinates, pos.mean(axis=0)),
        TimeSeries(np.arange(1, T + 1), variance, "variance"),
        moments,
    )


def _collapse(amps: np.ndarray, target: str, u: np.ndarray) -> np.ndarray:
    weights = np.abs(amps) ** 2  # (R, d, n)
    R, d, n = amps.shape
    if target == "coin":
        probs = weights.sum(axis=2)
    elif target == "position":
        probs = weights.sum(axis=1)
    else:
        probs = weights.reshape(R, d * n)
    cdf = np.cumsum(probs, axis=1)
    k = (cdf < (u * cdf[:, -1])[:, None]).sum(axis=1)
    k = np.minimum(k, probs.shape[1] - 1)
    keep = np.zeros(probs.shape, dtype=bool)
    keep[np.arange(R), k] = True
    norm = np.sqrt(probs[np.arange(R), k])[:, None, None]
    if target == "coin":
        mask = keep[:, :, None]
    elif target == "position":
        mask = keep[:, None, :]
    else:
        mask = keep.reshape(R, d, n)
    return np.where(mask, amps, 0) / norm


def exact_channel_run(start: WalkState, coin_map: CoinMap, spec: DecoherenceSpec, T: int,
                      shift: str = "keep", check: bool = False) -> DecoherenceResult:
    """Deterministic density-matrix evolution of the measurement channel."""
    g = start.graph
    d, n = start.amplitudes.shape
    if n > MAX_CHANNEL_POSITIONS:
        raise ResourceCapError(
            f"{n} positions exceeds the density-matrix cap of {MAX_CHANNEL_POSITIONS}"
        )
    state = _channel_evolve(start, coin_map, spec.p_meas, spec.target, T, shift, check)
    coords = g.coordinates.astype(float)
    dists = state.pop("history")
    variance = np.array([_variance(coords, p) for p in dists])
    return DecoherenceResult(
        Distribution(g.coordinates, dists[-1] if T else state["final"].position_probabilities()),
        TimeSeries(np.arange(1, T + 1), variance, "variance"),
    )


def channel_states(start: WalkState, coin_map: CoinMap, p_meas: float, target: str, T: int,
                   shift: str = "keep") -> DensityState:
    """Final :class:`DensityState` of the channel after ``T`` steps."""
    return _channel_evolve(start, coin_map, p_meas, target, T, shift, False)["final"]


def _channel_evolve(start, coin_map, p, target, T, shift, check):
    g = start.graph
    d, n = start.amplitudes.shape
    D = d * n
    coin = _coin_operator(g, coin_map)
    dest = _shift_table(g, shift)
    valid = dest >= 0
    psi = start.amplitudes.ravel()
    rho = np.outer(psi, psi.conj())
    # which entries survive a measurement of the chosen register
    dirs = np.repeat(np.arange(d), n)
    verts = np.tile(np.arange(n), d)
    if target == "coin":
        keep = dirs[:, None] == dirs[None, :]
    elif target == "position":
        keep = verts[:, None] == verts[None, :]
    else:
        keep = np.eye(D, dtype=bool)
    damp = np.where(keep, 1.0, 1.0 - p)
    history = []
    for _ in range(T):
        r4 = rho.reshape(d, n, d, n)
        if coin.ndim == 2:
            r4 = np.einsum("ij,jvkw->ivkw", coin, r4)
            r4 = np.einsum("ivkw,lk->ivlw", r4, coin.conj())
        else:
            r4 = np.einsum("vij,jvkw->ivkw", coin, r4)
            r4 = np.einsum("ivkw,wlk->ivlw", r4, coin.conj())
        flipped = r4.reshape(D, D)
        if np.any(np.diag(flipped)[~valid].real > 0):
            raise WindowOverflowError("walk support reached the edge of the window; enlarge W")
        rho = np.zeros_like(flipped)
        rho[np.ix_(dest[valid], dest[valid])] = flipped[np.ix_(valid, valid)]
        if p > 0:
            rho *= damp
        history.append(np.diag(rho).real.reshape(d, n).sum(axis=0))
        if check:
            DensityState(g, rho).check()
    return {"final": DensityState(g, rho), "history": history}


def multicoin_run(start: int, M: int, T: int, coin: Coin | None = None,
                  coin_state=(1 / np.sqrt(2), 1j / np.sqrt(2)),
                  cap: int = MAX_MULTICOIN_AMPLITUDES) -> DecoherenceResult:
    """Line walk with ``M`` coin registers, flipping register ``t mod M`` at step ``t``.

    Every register starts in ``coin_state``. When ``M >= T`` no register is
    ever reused, so each one can be traced out right after its step; the walk
    then reduces exactly to a convolution of single-step distributions.
    """
    if M < 1 or T < 0:
        raise ValueError("need M >= 1 and T >= 0")
    c = np.asarray(make_coin("hadamard") if coin is None else coin, dtype=complex)
    c0 = np.asarray(coin_state, dtype=complex)
    W = abs(start) + T + 1
    coords = np.arange(-W, W + 1)
    n = coords.size
    x0 = start + W
    variance = np.empty(T)
    if M >= T:
        step_p = np.abs(c @ c0) ** 2  # (p_right, p_left)
        p = np.zeros(n)
        p[x0] = 1.0
        for t in range(T):
            p = step_p[0] * np.roll(p, 1) + step_p[1] * np.roll(p, -1)
            variance[t] = _variance(coords.astype(float), p)
        return DecoherenceResult(Distribution(coords, p), TimeSeries(np.arange(1, T + 1), variance, "variance"))
    if 2**M * n > cap:
        raise ResourceCapError(f"2**{M} coin states x {n} positions exceeds the cap of {cap} amplitudes")
    coins = c0
    for _ in range(M - 1):
        coins = np.kron(coins, c0)
    amps = np.zeros((2**M, n), dtype=complex)
    amps[:, x0] = coins
    for t in range(T):
        f = t % M
        # register f is bit f of the coin index, counted from the most significant
        a = amps.reshape(2**f, 2, 2 ** (M - f - 1), n)
        a = np.einsum("ij,ajbx->aibx", c, a)
        out = np.zeros_like(a)
        out[:, 0, :, 1:] = a[:, 0, :, :-1]
        out[:, 1, :, :-1] = a[:, 1, :, 1:]
        amps = out.reshape(2**M, n)
        variance[t] = _variance(coords.astype(float), (np.abs(amps) ** 2).sum(axis=0))
    probs = (np.abs(amps) ** 2).sum(axis=0)
    return DecoherenceResult(Distribution(coords, probs), TimeSeries(np.arange(1, T + 1), variance, "variance"))


def variance_sweep(start: WalkState, coin_map: CoinMap, ps, T: int, target: str = "coin",
                   fit_from: int | None = None, shift: str = "keep") -> list[tuple]:
    """Exact-channel variance at ``T`` and growth exponent per ``p_meas``.

    The exponent is the log-log slope of the variance over steps
    ``fit_from..T`` (default ``T // 3``).
    """
    from .analysis import growth_exponent

    lo = max(1, T // 3) if fit_from is None else fit_from
    rows = []
    for p in ps:
        res = exact_channel_run(start, coin_map, DecoherenceSpec(p, target, "exact"), T, shift)
        rows.append((p, T, float(res.variance.values[-1]),
                     growth_exponent(res.variance.window(lo, T))))
    return rows


def sweep_csv(rows) -> str:
    return rows_to_csv(SWEEP_HEADER, rows)
