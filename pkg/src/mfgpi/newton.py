"""Direct Newton method on the full stationary system.

The residual has ``2|G| + 2`` rows (HJB, FP, two normalizations) for
``2|G| + 1`` unknowns ``(U, M, Lambda)``, so every Newton step is solved in
the least-squares sense.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .convergence import ConvergenceLog
from .errors import MaxIterationsExceeded
from .grid import quadrature
from .linalg import residual_norm2, solve_least_squares
from .operators import (
    assemble_fp_matrix,
    assemble_hjb_advection_matrix,
    difference_matrices,
    two_sided_gradient,
)
from .stationary import StationaryProblem, StationaryState, stationary_residual

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-8
    max_iters: int = 50
    u0: Optional[np.ndarray] = None
    m0: Optional[np.ndarray] = None
    lambda0: float = 0.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    def initial_state(self, problem: StationaryProblem) -> StationaryState:
        n = problem.grid.size
        u = np.zeros(n) if self.u0 is None else np.array(self.u0, dtype=float)
        m = np.ones(n) if self.m0 is None else np.array(self.m0, dtype=float)
        if abs(quadrature(m, problem.grid) - 1.0) > 1e-10:
            raise ValueError("initial density must have unit mass")
        return StationaryState(u, m, float(self.lambda0))


def jacobian_blocks(state: StationaryState, problem: StationaryProblem):
    """The four ``|G| x |G|`` blocks of the Jacobian of the HJB and FP rows.

    Derivatives of the clipped parts use the Heaviside convention ``H(0) = 0``.
    """
    grid = problem.grid
    g = two_sided_gradient(state.u, grid)
    hjb_u = assemble_hjb_advection_matrix(g, problem.eps, grid)
    hjb_m = -sp.diags(problem.coupling.derivative(state.m))
    # FP row is -eps Lap M - (D_R (M g_L^+) + D_L (M g_R^-)) summed over axes
    fp_u = sp.csr_matrix((grid.size, grid.size))
    for axis in range(grid.dim):
        d_left, d_right = difference_matrices(grid, axis)
        w_left = state.m * (g[:, 2 * axis] > 0)
        w_right = state.m * (g[:, 2 * axis + 1] < 0)
        fp_u = fp_u - d_right @ sp.diags(w_left) @ d_left - d_left @ sp.diags(w_right) @ d_right
    fp_m = assemble_fp_matrix(g, problem.eps, grid)
    return hjb_u, hjb_m, fp_u, fp_m


def assemble_jacobian(state: StationaryState, problem: StationaryProblem, coupled: bool = True):
    """Jacobian of :func:`stationary_residual`, shape ``(2|G|+2, 2|G|+1)``.

    With ``coupled=False`` the two cross blocks (``-F'(M)`` and the
    U-derivative of the divergence term) are dropped, which turns a Newton
    step into a policy iteration step.
    """
    grid = problem.grid
    n = grid.size
    hjb_u, hjb_m, fp_u, fp_m = jacobian_blocks(state, problem)
    if not coupled:
        hjb_m, fp_u = None, None
    ones = sp.csr_matrix(np.ones((n, 1)))
    weights = sp.csr_matrix(np.full((1, n), grid.cell_volume))
    return sp.bmat(
        [
            [hjb_u, hjb_m, ones],
            [fp_u, fp_m, None],
            [weights, None, sp.csr_matrix((1, 1))],
            [None, weights, None],
        ],
        format="csr",
    )


def newton_step(state: StationaryState, problem: StationaryProblem, coupled: bool = True) -> StationaryState:
    jac = assemble_jacobian(state, problem, coupled)
    step = solve_least_squares(jac, -stationary_residual(state, problem))
    return StationaryState.from_vector(state.as_vector() + step)


def newton_solve(problem: StationaryProblem, cfg: NewtonConfig = NewtonConfig(), callback=None):
    """Plain (undamped) Newton iteration until the residual 2-norm is below ``cfg.tol``."""
    state = cfg.initial_state(problem)
    conv = ConvergenceLog("residual")
    if residual_norm2(stationary_residual(state, problem)) < cfg.tol:
        return state, conv
    for k in range(1, cfg.max_iters + 1):
        state = newton_step(state, problem)
        res = residual_norm2(stationary_residual(state, problem))
        conv.record(k, res)
        log.debug("Newton iteration %d: residual %.3e", k, res)
        if callback is not None:
            callback(k, state)
        if res < cfg.tol:
            return state, conv
    raise MaxIterationsExceeded(
        f"Newton did not reach {cfg.tol:g} in {cfg.max_iters} iterations", state, conv
    )
