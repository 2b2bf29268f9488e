"""Coin unitaries for coined walks.

Available kinds: ``hadamard``, ``y``, ``rotation`` (2x2 only), ``dft``,
``grover`` and ``identity`` (any dimension).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Coin", "make_coin", "is_unitary", "is_balanced", "COIN_KINDS"]

COIN_KINDS = ("hadamard", "y", "dft", "grover", "rotation", "identity")


@dataclass(frozen=True, eq=False)
class Coin:
    matrix: np.ndarray
    family: str
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def make_coin(kind: str, d: int = 2, a: float | None = None, b_sign: int = 1,
              theta: float | None = None) -> Coin:
    """Build a coin.

    Parameters
    ----------
    kind : str
        One of :data:`COIN_KINDS`.
    d : int
        Coin dimension. ``hadamard``, ``y`` and ``rotation`` require ``d == 2``.
    a, b_sign : float, int
        Grover family diagonal entry and the sign of the off-diagonal entry
        ``b = b_sign * (1 - |a|)``. ``a`` defaults to ``2/d - 1``, giving
        ``b = 2/d``.
    theta : float
        Rotation angle for ``rotation``.

    Raises
    ------
    ValueError
        For an unknown kind, a wrong dimension, or Grover parameters outside
        ``1 - 2/d <= |a| <= 1`` or not giving a unitary.
    """
    if kind in ("hadamard", "y", "rotation") and d != 2:
        raise ValueError(f"{kind} coin is 2x2, got d={d}")
    if d < 1 or (kind in ("dft", "grover") and d < 2):
        raise ValueError(f"invalid coin dimension {d}")

    if kind == "hadamard":
        m = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        return Coin(m, kind)
    if kind == "y":
        m = np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)
        return Coin(m, kind)
    if kind == "rotation":
        if theta is None:
            raise ValueError("rotation coin needs theta")
        c, s = np.cos(theta), np.sin(theta)
        return Coin(np.array([[c, -s], [s, c]], dtype=complex), kind, {"theta": theta})
    if kind == "dft":
        jk = np.outer(np.arange(d), np.arange(d))
        return Coin(np.exp(2j * np.pi * jk / d) / np.sqrt(d), kind)
    if kind == "identity":
        return Coin(np.eye(d, dtype=complex), kind)
    if kind == "grover":
        if a is None:
            a = 2.0 / d - 1.0
        if b_sign not in (1, -1):
            raise ValueError("b_sign must be +1 or -1")
        if not (1 - 2.0 / d - 1e-12 <= abs(a) <= 1 + 1e-12):
            raise ValueError(f"Grover parameter |a|={abs(a)} outside [{1 - 2 / d}, 1]")
        b = b_sign * (1.0 - abs(a))
        m = np.full((d, d), b, dtype=complex)
        np.fill_diagonal(m, a)
        coin = Coin(m, kind, {"a": a, "b": b})
        if not is_unitary(coin, 1e-12):
            raise ValueError(f"Grover parameters a={a}, b={b} do not give a unitary")
        return coin
    raise ValueError(f"unknown coin kind {kind!r}; expected one of {COIN_KINDS}")


def is_unitary(c, tol: float = 1e-12) -> bool:
    """True iff ``max |C C^dagger - I| <= tol`` entrywise."""
    m = np.asarray(c, dtype=complex)
    dev = m @ m.conj().T - np.eye(m.shape[0])
    return bool(np.max(np.abs(dev)) <= tol)


def is_balanced(c, tol: float = 1e-12) -> bool:
    """True iff every entry has squared magnitude ``1/d`` (within ``tol``)."""
    m = np.asarray(c, dtype=complex)
    return bool(np.max(np.abs(np.abs(m) ** 2 - 1.0 / m.shape[0])) <= tol)
