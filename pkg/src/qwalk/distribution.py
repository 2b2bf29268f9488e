"""Probability distributions over walk positions and simple time series."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = ["Distribution", "TimeSeries", "point_mass", "uniform"]


@dataclass(frozen=True)
class Distribution:
    """Nonnegative weights indexed by a support of position labels.

    ``support`` holds the label of each entry (a vertex id, or a line
    coordinate for line windows). ``mass`` is the total weight; it is 1 for
    normalized distributions and smaller for the residual of an absorbing run.
    """

    support: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        support = np.asarray(self.support)
        values = np.asarray(self.values, dtype=float)
        if support.shape != values.shape or values.ndim != 1:
            raise ValueError("support and values must be 1-d arrays of equal length")
        if np.any(values < -1e-12):
            raise ValueError("distribution values must be nonnegative")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "values", np.clip(values, 0.0, None))

    @classmethod
    def from_values(cls, values: Sequence[float], support: Sequence | None = None) -> Distribution:
        values = np.asarray(values, dtype=float)
        if support is None:
            support = np.arange(values.size)
        return cls(np.asarray(support), values)

    @property
    def mass(self) -> float:
        return float(self.values.sum())

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, label) -> float:
        idx = np.flatnonzero(self.support == label)
        if idx.size == 0:
            raise KeyError(label)
        return float(self.values[idx[0]])

    def as_dict(self, tol: float = 0.0) -> dict:
        """Map label -> probability, dropping entries at or below ``tol``."""
        return {
            _plain(s): float(v) for s, v in zip(self.support, self.values) if v > tol
        }

    def normalized(self) -> Distribution:
        return Distribution(self.support, self.values / self.mass)

    def to_csv(self, header: tuple[str, str] = ("position", "probability")) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for s, v in zip(self.support, self.values):
            writer.writerow([_plain(s), repr(float(v))])
        return buf.getvalue()


def point_mass(support: Sequence, label) -> Distribution:
    support = np.asarray(support)
    values = (support == label).astype(float)
    if values.sum() != 1:
        raise KeyError(label)
    return Distribution(support, values)


def uniform(support: Sequence) -> Distribution:
    support = np.asarray(support)
    return Distribution(support, np.full(support.size, 1.0 / support.size))


@dataclass(frozen=True)
class TimeSeries:
    """Values sampled at strictly increasing times."""

    times: np.ndarray
    values: np.ndarray
    name: str = field(default="value")

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.times.size

    def window(self, lo: float, hi: float) -> TimeSeries:
        keep = (self.times >= lo) & (self.times <= hi)
        return TimeSeries(self.times[keep], self.values[keep], self.name)

    def to_csv(self, time_header: str = "t") -> str:
        return rows_to_csv(
            (time_header, self.name),
            ((_plain(t), repr(float(v))) for t, v in zip(self.times, self.values)),
        )


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _plain(x):
    # numpy scalars -> python scalars; integral floats print as ints
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and x.is_integer():
        return int(x)
    return x
