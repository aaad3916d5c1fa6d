"""Named potentials, couplings and initial/final data used by the experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import UnknownId
from .grid import PeriodicGrid, quadrature


@dataclass(frozen=True)
class Coupling:
    """Local coupling cost ``F(m)`` with its derivative, applied entrywise."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]

    def __call__(self, m):
        return self.value(np.asarray(m, dtype=float))


COUPLINGS = {
    "zero": Coupling("zero", lambda m: np.zeros_like(m), lambda m: np.zeros_like(m)),
    "square": Coupling("square", lambda m: m**2, lambda m: 2.0 * m),
    "linear": Coupling("linear", lambda m: m.copy(), lambda m: np.ones_like(m)),
}


def _paper_1d(x1, *rest):
    return np.sin(2 * np.pi * x1) + np.cos(4 * np.pi * x1)


def _paper_2d(x1, x2):
    return -np.abs(np.sin(2 * np.pi * x1) * np.sin(2 * np.pi * x2))


POTENTIALS = {
    "zero": lambda *x: np.zeros_like(x[0]),
    "paper-1d": _paper_1d,
    "paper-2d": _paper_2d,
}


def builtin_coupling(name: str) -> Coupling:
    try:
        return COUPLINGS[name]
    except KeyError:
        raise UnknownId(f"unknown coupling {name!r}; choose from {sorted(COUPLINGS)}") from None


def builtin_potential(name: str, grid: PeriodicGrid) -> np.ndarray:
    """Sample a named potential at the grid nodes.

    ``paper-1d`` is ``sin(2 pi x) + cos(4 pi x)`` and depends on the first
    coordinate only; ``paper-2d`` is ``-|sin(2 pi x1) sin(2 pi x2)|`` and
    needs a two dimensional grid.
    """
    if name not in POTENTIALS:
        raise UnknownId(f"unknown potential {name!r}; choose from {sorted(POTENTIALS)}")
    if name == "paper-2d" and grid.dim != 2:
        raise UnknownId("potential 'paper-2d' requires dim = 2")
    return grid.sample(POTENTIALS[name])


def gaussian_density(grid: PeriodicGrid, center=0.5, width=40.0) -> np.ndarray:
    """``C exp(-width |x - center|^2)`` with ``C`` fixing unit discrete mass."""
    r2 = np.sum((grid.coords - center) ** 2, axis=1)
    g = np.exp(-width * r2)
    return g / quadrature(g, grid)


INITIAL_DATA = ("paper-gaussian", "gaussian-zero-cost", "uniform")


def builtin_initial_data(name: str, grid: PeriodicGrid):
    """Return ``(m0, uT)`` for a named evolutive test case.

    ``paper-gaussian`` gives the opposite-sign Gaussian pair centered at the
    middle of the torus; ``gaussian-zero-cost`` keeps the Gaussian density
    with a zero final cost and ``uniform`` is the constant unit density with
    zero final cost.
    """
    if name == "paper-gaussian":
        m0 = gaussian_density(grid)
        return m0, -m0
    if name == "gaussian-zero-cost":
        return gaussian_density(grid), np.zeros(grid.size)
    if name == "uniform":
        return np.ones(grid.size), np.zeros(grid.size)
    raise UnknownId(f"unknown initial data {name!r}; choose from {list(INITIAL_DATA)}")
