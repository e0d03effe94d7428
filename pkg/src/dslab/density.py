"""Binned densities on [0, 1)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class DensityTable:
    """Piecewise-constant density over ``B`` equal bins of [0, 1).

    ``values[i]`` is the density on bin ``i``; the mass of the table is
    ``sum(values) / B``.  Masses need not be 1: aggregates of sub-probability
    families are tabulated too.
    """
    values: np.ndarray
    total_mass: float | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        mass = float(self.values.sum() / self.bins)
        if self.total_mass is None:
            self.total_mass = mass
        elif abs(self.total_mass - mass) > 1e-9 * max(1.0, abs(mass)):
            raise ValueError(f"declared mass {self.total_mass} != tabulated mass {mass}")

    @property
    def bins(self) -> int:
        return self.values.size

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.bins + 1)

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.bins) + 0.5) / self.bins

    @classmethod
    def from_counts(cls, counts, mass: float = 1.0) -> "DensityTable":
        counts = np.asarray(counts, dtype=float)
        tot = counts.sum()
        vals = counts * (counts.size * mass / tot) if tot > 0 else counts
        return cls(vals)

    @classmethod
    def from_samples(cls, x, bins: int, weights=None, mass: float = 1.0) -> "DensityTable":
        idx = np.minimum((np.mod(x, 1.0) * bins).astype(np.int64), bins - 1)
        return cls.from_counts(np.bincount(idx, weights=weights, minlength=bins), mass)

    def __add__(self, other: "DensityTable") -> "DensityTable":
        return DensityTable(self.values + other.values)

    def __sub__(self, other: "DensityTable") -> "DensityTable":
        return DensityTable(self.values - other.values)

    def sup_deviation(self, level: float = 1.0) -> float:
        return float(np.max(np.abs(self.values - level)))
