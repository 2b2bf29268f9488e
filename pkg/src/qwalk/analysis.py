"""Distribution metrics and walk observables.

A *walk source* is any object with a ``distributions(t_max)`` method yielding
the position distribution at ``t = 0..t_max`` and an ``absorbing(boundaries,
T)`` method returning an :class:`~qwalk.dtqw.AbsorptionRecord`; both
:class:`~qwalk.dtqw.QuantumWalk` and :class:`~qwalk.classical.ClassicalWalk`
qualify. Total variation follows the unhalved convention ``sum |p - q|``, so
it ranges over ``[0, 2]``.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np
from scipy.linalg import schur

from .distribution import Distribution, TimeSeries, rows_to_csv
from .dtqw import WalkState

__all__ = [
    "Distribution",
    "TimeSeries",
    "total_variation",
    "cesaro_average",
    "cesaro_series",
    "limiting_cesaro",
    "empirical_mixing_time",
    "moments",
    "variance_series",
    "growth_exponent",
    "one_shot_hitting",
    "concurrent_hitting",
    "sweep_to_csv",
]

PHASE_TOL = 1e-9


def total_variation(p: Distribution, q: Distribution, mass_tol: float = 1e-9) -> float:
    """``sum_i |p_i - q_i|`` over a shared support."""
    if p.support.shape != q.support.shape or not np.array_equal(p.support, q.support):
        raise ValueError("distributions have different supports")
    for d in (p, q):
        if abs(d.mass - 1.0) > mass_tol:
            raise ValueError(f"distribution has mass {d.mass}, expected 1")
    return float(np.sum(np.abs(p.values - q.values)))


def _steps(walk, t_max: int) -> Iterator[Distribution]:
    # distributions for t = 1..t_max
    if hasattr(walk, "distributions"):
        it = walk.distributions(t_max)
        next(it)
        yield from it
    else:
        for t, dist in enumerate(walk, start=1):
            if t > t_max:
                break
            yield dist


def cesaro_series(walk, t_max: int) -> Iterator[Distribution]:
    """Running averages ``c^t = (1/t) sum_{s=1..t} p^s`` for ``t = 1..t_max``."""
    total = None
    support = None
    for t, dist in enumerate(_steps(walk, t_max), start=1):
        total = dist.values.copy() if total is None else total + dist.values
        support = dist.support
        yield Distribution(support, total / t)


def cesaro_average(walk, T: int) -> Distribution:
    """Average of the position distributions at steps ``1..T``.

    ``walk`` is a walk source or an iterable yielding ``p^1, p^2, ...``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    out = None
    for out in cesaro_series(walk, T):
        pass
    if out is None:
        raise ValueError("walk source produced no distributions")
    return out


def _phase_groups(phases: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(phases)
    sorted_ph = phases[order]
    groups = [[order[0]]]
    for k in range(1, order.size):
        if sorted_ph[k] - sorted_ph[k - 1] <= tol:
            groups[-1].append(order[k])
        else:
            groups.append([order[k]])
    # eigenphases live on a circle: merge across the -pi/pi seam
    if len(groups) > 1 and (sorted_ph[0] + 2 * np.pi) - sorted_ph[-1] <= tol:
        groups[0] = groups.pop() + groups[0]
    return [np.array(g) for g in groups]


def limiting_cesaro(U: np.ndarray, initial: WalkState, tol: float = PHASE_TOL) -> Distribution:
    """Long-time limit of the Cesaro average, from the spectrum of ``U``.

    The limit is ``sum_lambda |P_lambda psi|^2`` summed over coin directions,
    where ``P_lambda`` projects onto the eigenspace of eigenvalue ``lambda``;
    eigenvalues whose phases differ by at most ``tol`` radians are treated as
    equal.
    """
    psi = initial.amplitudes.ravel()
    u = np.asarray(U, dtype=complex)
    if u.shape != (psi.size, psi.size):
        raise ValueError("unitary and state dimensions differ")
    t, z = schur(u, output="complex")
    phases = np.angle(np.diag(t))
    coeff = z.conj().T @ psi
    probs = np.zeros(psi.size)
    for g in _phase_groups(phases, tol):
        comp = z[:, g] @ coeff[g]
        probs += np.abs(comp) ** 2
    d, n = initial.amplitudes.shape
    return Distribution(initial.graph.coordinates, probs.reshape(d, n).sum(axis=0))


def empirical_mixing_time(walk, target: Distribution, eps: float, t_max: int,
                          cesaro: bool | None = None) -> int | None:
    """Smallest ``T <= t_max`` after which the distance to ``target`` stays ``<= eps``.

    Cesaro averages are used for quantum walks (``cesaro=None`` picks by
    ``walk.quantum``), instantaneous distributions otherwise. Returns None if
    the distance at ``t_max`` still exceeds ``eps``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if cesaro is None:
        cesaro = bool(getattr(walk, "quantum", False))
    if cesaro:
        dists = cesaro_series(walk, t_max)
        first = 1
    else:
        dists = walk.distributions(t_max)
        first = 0
    last_bad = first - 1
    for t, dist in enumerate(dists, start=first):
        if total_variation(dist, target) > eps:
            last_bad = t
    if last_bad == t_max:
        return None
    return last_bad + 1


def moments(p: Distribution, embedding=None) -> tuple[float, float]:
    """Mean and variance of position under ``embedding``.

    ``embedding`` maps support labels to reals: a callable, a mapping, or
    None for the labels themselves.
    """
    if abs(p.mass - 1.0) > 1e-9:
        raise ValueError(f"moments need a normalized distribution (mass {p.mass})")
    if embedding is None:
        x = p.support.astype(float)
    elif callable(embedding):
        x = np.array([embedding(s) for s in p.support], dtype=float)
    else:
        x = np.array([embedding[s] for s in p.support], dtype=float)
    mean = float(np.dot(p.values, x))
    var = float(np.dot(p.values, (x - mean) ** 2))
    return mean, var


def variance_series(walk, t_max: int) -> TimeSeries:
    """Position variance at ``t = 1..t_max``."""
    values = [moments(dist)[1] for dist in _steps(walk, t_max)]
    return TimeSeries(np.arange(1, len(values) + 1), values, "variance")


def growth_exponent(series: TimeSeries) -> float:
    """Least-squares slope of ``log(value)`` against ``log(time)``."""
    if len(series) < 5:
        raise ValueError("need at least 5 points")
    if np.any(series.values <= 0) or np.any(series.times <= 0):
        raise ValueError("growth exponent needs positive times and values")
    slope, _ = np.polyfit(np.log(series.times), np.log(series.values), 1)
    return float(slope)


def _target_index(walk, target) -> int:
    hit = np.flatnonzero(np.asarray(walk.support) == target)
    if hit.size == 0:
        raise KeyError(f"target {target!r} is not in the walk's support")
    return int(hit[0])


def one_shot_hitting(walk, target, t_max: int) -> tuple[int, float]:
    """Time ``t <= t_max`` maximizing the probability at ``target``, and that probability."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    idx = _target_index(walk, target)
    best_t, best_p = 0, -1.0
    for t, dist in enumerate(walk.distributions(t_max)):
        if dist.values[idx] > best_p + 1e-15:
            best_t, best_p = t, float(dist.values[idx])
    return best_t, best_p


def concurrent_hitting(walk, target, p_threshold: float, t_max: int) -> int | None:
    """First step at which the mass absorbed at ``target`` reaches ``p_threshold``.

    The target is measured after every step and found mass is removed.
    Returns None if the threshold is not reached by ``t_max``.
    """
    if not 0 < p_threshold <= 1:
        raise ValueError("p_threshold must lie in (0, 1]")
    idx = _target_index(walk, target)
    start = next(iter(walk.distributions(0)))
    if start.values[idx] >= p_threshold:
        return 0
    record = walk.absorbing([idx], t_max)
    reached = np.flatnonzero(record.cumulative >= p_threshold - 1e-12)
    return int(reached[0]) if reached.size else None


def sweep_to_csv(rows: Iterable[tuple], header=("parameter", "t", "value")) -> str:
    return rows_to_csv(header, rows)
