"""Uniform periodic grids on the unit torus, time grids and quadrature.

Scalar fields are plain 1-D ``numpy`` arrays of length ``grid.size``.
Policy fields are arrays of shape ``(grid.size, 2 * grid.dim)`` whose
columns are ordered ``(Q_L^1, Q_R^1[, Q_L^2, Q_R^2])``.

In two dimensions nodes are numbered row-major, ``k = i + I * j`` where
``i`` indexes the first coordinate and ``j`` the second.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


def wrap_index(i, n):
    """Periodic index ``(i + n) mod n``; works on scalars and integer arrays."""
    return np.mod(i + n, n) if isinstance(i, np.ndarray) else (i + n) % n


def positive_part(x):
    return np.maximum(x, 0.0)


def negative_part(x):
    return np.minimum(x, 0.0)


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid with ``nodes`` points per dimension on the unit torus."""

    dim: int
    nodes: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.nodes < 3:
            raise ValueError(f"need at least 3 nodes per dimension, got {self.nodes}")

    @property
    def h(self) -> float:
        return 1.0 / self.nodes

    @property
    def size(self) -> int:
        return self.nodes**self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    @cached_property
    def multi_index(self) -> np.ndarray:
        """Array of shape ``(size, dim)`` with the per-dimension index of every node."""
        k = np.arange(self.size)
        return np.stack([(k // self.nodes**d) % self.nodes for d in range(self.dim)], axis=1)

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates ``x = i * h``, shape ``(size, dim)``."""
        return self.multi_index * self.h

    def flat_index(self, idx) -> np.ndarray:
        """Inverse of :attr:`multi_index`; wraps every component periodically."""
        idx = wrap_index(np.asarray(idx), self.nodes)
        return sum(idx[..., d] * self.nodes**d for d in range(self.dim))

    def neighbors(self, axis: int, step: int) -> np.ndarray:
        """Flat index of the node ``step`` cells away along ``axis``, for every node."""
        return self._neighbor_table[(axis, step)]

    @cached_property
    def _neighbor_table(self):
        table = {}
        for axis in range(self.dim):
            for step in (-1, 1):
                shifted = self.multi_index.copy()
                shifted[:, axis] += step
                nb = self.flat_index(shifted)
                nb.setflags(write=False)
                table[(axis, step)] = nb
        return table

    def reshape(self, values: np.ndarray) -> np.ndarray:
        """View a flat field as an ``(I,)`` or ``(I, I)`` array indexed ``[i, j]``."""
        if self.dim == 1:
            return values.reshape(self.nodes)
        return values.reshape(self.nodes, self.nodes).T

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(x1[, x2])`` at every node."""
        return np.asarray(func(*self.coords.T), dtype=float) * np.ones(self.size)


@dataclass(frozen=True)
class TimeGrid:
    horizon: float
    steps: int
    times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.steps < 1:
            raise ValueError("need at least one time step")
        object.__setattr__(self, "times", np.arange(self.steps + 1) * self.dt)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps


def quadrature(values: np.ndarray, grid: PeriodicGrid) -> float:
    """Rectangle rule ``h^d * sum(values)`` over the torus."""
    return grid.cell_volume * float(np.sum(values))


def check_scalar_field(values, grid: PeriodicGrid, name: str = "field") -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.size,):
        raise ValueError(f"{name} must have shape ({grid.size},), got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} has non-finite entries")
    return values


def check_policy_field(q, grid: PeriodicGrid, name: str = "policy") -> np.ndarray:
    q = np.asarray(q, dtype=float)
    shape = (grid.size, 2 * grid.dim)
    if q.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError(f"{name} has non-finite entries")
    return q


def zero_policy(grid: PeriodicGrid) -> np.ndarray:
    return np.zeros((grid.size, 2 * grid.dim))
