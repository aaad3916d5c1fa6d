"""Policy iteration for the time dependent MFG system with implicit Euler.

Each outer iteration does a forward Fokker-Planck sweep
``(I + dt A(Q_{n+1})) M_{n+1} = M_n``, a backward HJB sweep
``(I + dt A^T(Q_n)) U_n = U_{n+1} + dt (0.5|Q_n|^2 + V + F(M_{n+1}))``
and then resets every ``Q_n`` to the two-sided gradient of ``U_n``.

By default the running cost ``0.5|Q|^2`` uses the same policy ``Q_n`` as the
advection term, so the backward sweep evaluates one fixed feedback.  Passing
``cost_at_next=True`` takes it from ``Q_{n+1}`` instead.

Fields are stored as arrays: densities and values with shape
``(N + 1, |G|)``, policies with shape ``(N + 1, |G|, 2d)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .convergence import ConvergenceLog
from .errors import MaxIterationsExceeded
from .grid import PeriodicGrid, TimeGrid, check_scalar_field, quadrature
from .linalg import solve_square
from .operators import assemble_fp_matrix, assemble_hjb_advection_matrix, merge_policy, policy_half_norm_sq
from .presets import Coupling
from .stationary import DEFAULT_CAP, PiConfig, check_density, update_policy

log = logging.getLogger(__name__)

DEFAULT_MAX_OUTER = 500

merge_policy_for_output = merge_policy


@dataclass(frozen=True)
class EvolutiveProblem:
    grid: PeriodicGrid
    time: TimeGrid
    eps: float
    potential: np.ndarray
    coupling: Coupling
    m0: np.ndarray
    u_final: np.ndarray
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        for name in ("potential", "m0", "u_final"):
            object.__setattr__(self, name, check_scalar_field(getattr(self, name), self.grid, name))
        if self.m0.min() < 0 or abs(quadrature(self.m0, self.grid) - 1.0) > 1e-10:
            raise ValueError("m0 must be nonnegative with unit mass")

    @property
    def policy_shape(self):
        return (self.time.steps + 1, self.grid.size, 2 * self.grid.dim)


@dataclass
class EvolutiveState:
    u: np.ndarray
    m: np.ndarray
    q: np.ndarray


def _identity(n):
    return sp.identity(n, format="csr")


def _check_policies(q, problem):
    q = np.asarray(q, dtype=float)
    if q.shape != problem.policy_shape:
        raise ValueError(f"policy sequence must have shape {problem.policy_shape}, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("policy sequence has non-finite entries")
    return q


def fp_forward_sweep(q, problem: EvolutiveProblem) -> np.ndarray:
    q = _check_policies(q, problem)
    grid, dt = problem.grid, problem.time.dt
    m = np.empty((problem.time.steps + 1, grid.size))
    m[0] = problem.m0
    eye = _identity(grid.size)
    for n in range(problem.time.steps):
        mat = eye + dt * assemble_fp_matrix(q[n + 1], problem.eps, grid)
        m[n + 1] = solve_square(mat, m[n])
    return m


def hjb_backward_sweep(q, m, problem: EvolutiveProblem, cost_at_next: bool = False) -> np.ndarray:
    """Backward implicit Euler sweep for the linear HJB equation.

    The advection always uses ``Q_n``; the running cost ``0.5|Q|^2`` uses
    ``Q_n`` too unless ``cost_at_next`` asks for ``Q_{n+1}``.
    """
    q = _check_policies(q, problem)
    grid, dt = problem.grid, problem.time.dt
    steps = problem.time.steps
    u = np.empty((steps + 1, grid.size))
    u[steps] = problem.u_final
    eye = _identity(grid.size)
    for n in range(steps - 1, -1, -1):
        cost_policy = q[n + 1] if cost_at_next else q[n]
        rhs = u[n + 1] + dt * (policy_half_norm_sq(cost_policy) + problem.potential + problem.coupling(m[n + 1]))
        mat = eye + dt * assemble_hjb_advection_matrix(q[n], problem.eps, grid)
        u[n] = solve_square(mat, rhs)
    return u


def policy_distance(q_new, q_old, grid: PeriodicGrid) -> float:
    """``max_n int |Q_new_n - Q_old_n|^2``."""
    sq = np.sum((q_new - q_old) ** 2, axis=2)
    return float(grid.cell_volume * sq.sum(axis=1).max())


def policy_iteration_evolutive(
    problem: EvolutiveProblem,
    q0=None,
    cfg: PiConfig = PiConfig(max_outer=DEFAULT_MAX_OUTER),
    cost_at_next: bool = False,
    callback=None,
):
    """Iterate forward/backward sweeps until the policy distance drops below ``cfg.tol``.

    The returned state carries the updated policy ``Q^{(k+1)} = D U^{(k)}``,
    i.e. the feedback that is consistent with the returned values ``U``.
    Only ``cfg.tol`` and ``cfg.max_outer`` are used.
    """
    grid = problem.grid
    q = np.zeros(problem.policy_shape) if q0 is None else _check_policies(q0, problem).copy()
    conv = ConvergenceLog("policy_distance")
    state = None
    for k in range(1, cfg.max_outer + 1):
        m = fp_forward_sweep(q, problem)
        for n, mn in enumerate(m):
            check_density(mn, grid, f"evolutive iteration {k}, time node {n}")
        u = hjb_backward_sweep(q, m, problem, cost_at_next)
        q_new = np.stack([update_policy(un, problem.cap, grid) for un in u])
        dist = policy_distance(q_new, q, grid)
        conv.record(k, dist)
        log.debug("evolutive iteration %d: policy distance %.3e", k, dist)
        state = EvolutiveState(u, m, q_new)
        if callback is not None:
            callback(k, state)
        if dist < cfg.tol:
            return state, conv
        q = q_new
    raise MaxIterationsExceeded(
        f"evolutive policy iteration did not reach {cfg.tol:g} in {cfg.max_outer} iterations", state, conv
    )
