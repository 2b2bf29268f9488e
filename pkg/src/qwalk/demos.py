"""Post-selected displacement of a spin-1/2 wave packet.

A packet carrying a spin is translated conditionally on the spin (the
``up`` component moves to ``x0 - l``, the ``down`` component to ``x0 + l``),
the spin is rotated by ``R(theta)`` and then measured. Conditioning on the
rare outcome moves the packet by ``l * delta`` with ``|delta|`` far larger
than one.

Displacements follow the translation convention above: a branch whose packet
ends centred at ``x0 - l * delta`` has displacement ``delta`` (in units of
``l``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .distribution import rows_to_csv

__all__ = [
    "PostSelectionSetup",
    "AnalyticBranches",
    "SimulatedBranches",
    "setup_for_epsilon",
    "analytic_postselection",
    "wavepacket_simulation",
    "postselection_sweep",
    "SWEEP_HEADER",
]

MAX_STEP_TO_WIDTH = 0.05
SWEEP_HEADER = ("epsilon", "delta_x", "p_up_analytic", "p_up_measured",
                "delta_up_analytic", "delta_up_measured")


@dataclass(frozen=True)
class PostSelectionSetup:
    """Spin amplitudes, rotation angle and packet geometry (grid units).

    ``grid_size`` defaults to ``20 * delta_x`` rounded up.
    """

    alpha_up: complex
    alpha_down: complex
    theta: float
    l: int = 1
    delta_x: float = 400.0
    grid_size: int | None = None

    def __post_init__(self) -> None:
        norm = abs(self.alpha_up) ** 2 + abs(self.alpha_down) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"spin amplitudes have norm {norm}, expected 1")
        if self.l < 1 or int(self.l) != self.l:
            raise ValueError("step length l must be a positive integer number of grid cells")
        if self.delta_x <= 0:
            raise ValueError("packet width must be positive")
        if self.grid_size is None:
            object.__setattr__(self, "grid_size", int(math.ceil(20 * self.delta_x)))

    @property
    def x0(self) -> int:
        return self.grid_size // 2


@dataclass(frozen=True)
class AnalyticBranches:
    """Closed-form branch probabilities and displacements.

    A displacement is None when its branch has probability zero.
    Displacements are real for real amplitudes and complex otherwise.
    """

    p_up: float
    p_down: float
    delta_up: complex | float | None
    delta_down: complex | float | None

    @property
    def degenerate(self) -> bool:
        return self.delta_up is None or self.delta_down is None


@dataclass(frozen=True)
class SimulatedBranches:
    p_up: float
    p_down: float
    delta_up: float | None
    delta_down: float | None


def setup_for_epsilon(eps: float, delta_x: float = 400.0, l: int = 1,
                      alpha_up: complex = 1 / math.sqrt(2),
                      alpha_down: complex = 1 / math.sqrt(2)) -> PostSelectionSetup:
    """Setup with ``tan(theta) = |alpha_up / alpha_down| (1 + eps)``."""
    theta = math.atan(abs(alpha_up / alpha_down) * (1 + eps))
    return PostSelectionSetup(alpha_up, alpha_down, theta, l, delta_x)


def _tidy(z: complex) -> complex | float:
    return z.real if abs(z.imag) <= 1e-12 * max(1.0, abs(z)) else z


def analytic_postselection(setup: PostSelectionSetup, tol: float = 1e-15) -> AnalyticBranches:
    """Evaluate ``p_up, p_down, delta_up, delta_down`` exactly.

    Examples
    --------
    >>> s = PostSelectionSetup(1 / 2**0.5, 1 / 2**0.5, 0.0)
    >>> b = analytic_postselection(s)
    >>> round(b.p_up, 12), b.delta_up, b.delta_down
    (0.5, 1.0, -1.0)
    """
    au, ad = complex(setup.alpha_up), complex(setup.alpha_down)
    c, s = math.cos(setup.theta), math.sin(setup.theta)
    den_up = au * c - ad * s
    den_down = au * s + ad * c
    p_up, p_down = abs(den_up) ** 2, abs(den_down) ** 2
    d_up = None if abs(den_up) <= tol else _tidy((au * c + ad * s) / den_up)
    d_down = None if abs(den_down) <= tol else _tidy((au * s - ad * c) / den_down)
    return AnalyticBranches(p_up, p_down, d_up, d_down)


def _gaussian(setup: PostSelectionSetup) -> tuple[np.ndarray, np.ndarray]:
    if setup.grid_size < 20 * setup.delta_x:
        raise ValueError("grid must span at least 20 packet widths to avoid wraparound")
    if setup.l / setup.delta_x > MAX_STEP_TO_WIDTH:
        raise ValueError(f"step/width ratio {setup.l / setup.delta_x} exceeds {MAX_STEP_TO_WIDTH}")
    x = np.arange(setup.grid_size, dtype=float)
    # |psi|^2 has standard deviation delta_x
    psi = np.exp(-((x - setup.x0) ** 2) / (4 * setup.delta_x**2))
    return x, psi / np.linalg.norm(psi)


def wavepacket_simulation(setup: PostSelectionSetup, rng=None, shots: int = 100_000) -> SimulatedBranches:
    """Conditional grid translation, spin rotation and spin measurement.

    With ``rng=None`` (or ``"exact"``) branch probabilities and posterior
    means come straight from the amplitudes. Otherwise ``shots`` runs are
    sampled: a spin outcome, then a position from that branch.
    """
    x, psi = _gaussian(setup)
    l = int(setup.l)
    moved_up = setup.alpha_up * np.roll(psi, -l)
    moved_down = setup.alpha_down * np.roll(psi, l)
    c, s = math.cos(setup.theta), math.sin(setup.theta)
    branch_up = c * moved_up - s * moved_down
    branch_down = s * moved_up + c * moved_down
    w_up, w_down = np.abs(branch_up) ** 2, np.abs(branch_down) ** 2
    p_up, p_down = float(w_up.sum()), float(w_down.sum())

    def displacement(mean):
        return float((setup.x0 - mean) / l)

    if rng is None or (isinstance(rng, str) and rng == "exact"):
        d_up = displacement(np.dot(w_up, x) / p_up) if p_up > 0 else None
        d_down = displacement(np.dot(w_down, x) / p_down) if p_down > 0 else None
        return SimulatedBranches(p_up, p_down, d_up, d_down)

    rng = np.random.default_rng(rng)
    ups = int(rng.binomial(shots, p_up / (p_up + p_down)))
    d_up = d_down = None
    if ups:
        d_up = displacement(rng.choice(x, size=ups, p=w_up / p_up).mean())
    if shots - ups:
        d_down = displacement(rng.choice(x, size=shots - ups, p=w_down / p_down).mean())
    return SimulatedBranches(ups / shots, 1 - ups / shots, d_up, d_down)


def postselection_sweep(epsilons: Iterable[float], widths: Iterable[float], l: int = 1,
                        rng=None) -> str:
    """CSV comparing closed forms against the grid simulation."""
    rows = []
    for eps in epsilons:
        for dx in widths:
            setup = setup_for_epsilon(eps, dx, l)
            a = analytic_postselection(setup)
            sim = wavepacket_simulation(setup, rng)
            rows.append((eps, dx, a.p_up, sim.p_up, a.delta_up, sim.delta_up))
    return rows_to_csv(SWEEP_HEADER, rows)
