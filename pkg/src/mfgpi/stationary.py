"""Policy iteration for the discrete stationary (ergodic) MFG system.

Unknowns are the zero-mean corrector ``U``, the unit-mass density ``M`` and
the ergodic constant ``Lambda``.  Each outer iteration freezes a two-sided
policy ``Q`` and

1. solves the Fokker-Planck equation ``A(Q) M = 0`` by a few steps of the
   shifted M-matrix iteration ``(mu I + A(Q)) W_{s+1} = mu W_s``,
2. solves the linear HJB equation for ``(U, Lambda)`` as a bordered system,
3. resets ``Q`` to the two-sided gradient of ``U``, capped at norm ``R``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .convergence import ConvergenceLog
from .errors import MaxIterationsExceeded, SingularSystem
from .grid import PeriodicGrid, check_policy_field, check_scalar_field, quadrature
from .linalg import Factorization, residual_norm2, solve_least_squares, solve_square
from .operators import (
    assemble_fp_matrix,
    assemble_hjb_advection_matrix,
    discrete_laplacian,
    eikonal_hamiltonian,
    policy_half_norm_sq,
    two_sided_gradient,
)
from .presets import Coupling

log = logging.getLogger(__name__)

DEFAULT_CAP = 1e6
MASS_TOL = 1e-12
NEGATIVITY_TOL = 1e-12


@dataclass(frozen=True)
class StationaryProblem:
    grid: PeriodicGrid
    eps: float
    potential: np.ndarray
    coupling: Coupling
    cap: float = DEFAULT_CAP

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.cap > 0:
            raise ValueError("cap must be positive")
        object.__setattr__(self, "potential", check_scalar_field(self.potential, self.grid, "potential"))


@dataclass(frozen=True)
class PiConfig:
    tol: float = 1e-8
    mu: float = 1e-3
    inner_steps: int = 1
    max_outer: int = 200
    warm_start_fp: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if self.inner_steps < 1:
            raise ValueError("inner_steps must be at least 1")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")


@dataclass
class StationaryState:
    u: np.ndarray
    m: np.ndarray
    lam: float

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.u, self.m, [self.lam]])

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "StationaryState":
        n = (len(x) - 1) // 2
        return cls(x[:n].copy(), x[n : 2 * n].copy(), float(x[-1]))


def check_density(m, grid, where="density"):
    """Warn (never project) when a computed density loses mass or sign."""
    mass_err = abs(quadrature(m, grid) - 1.0)
    low = float(m.min())
    if mass_err > MASS_TOL or low < -NEGATIVITY_TOL:
        warnings.warn(
            f"{where}: mass error {mass_err:.2e}, min entry {low:.2e}",
            RuntimeWarning,
            stacklevel=3,
        )
    return mass_err, low


def has_mmatrix_sign_structure(mat) -> bool:
    """Positive diagonal and nonpositive off-diagonal entries."""
    mat = sp.coo_matrix(mat)
    on_diag = mat.row == mat.col
    return bool(np.all(mat.diagonal() > 0) and np.all(mat.data[~on_diag] <= 0))


def solve_fp_mmatrix(q, problem: StationaryProblem, w0, cfg: PiConfig) -> np.ndarray:
    """Run ``cfg.inner_steps`` shifted M-matrix iterations from ``w0``.

    Raises :class:`SingularSystem` if ``mu I + A(Q)`` cannot be factorized.
    """
    grid = problem.grid
    w = check_scalar_field(w0, grid, "w0")
    if w.min() < -NEGATIVITY_TOL or abs(quadrature(w, grid) - 1.0) > 1e-10:
        raise ValueError("w0 must be nonnegative with unit mass")
    shifted = cfg.mu * sp.identity(grid.size, format="csr") + assemble_fp_matrix(q, problem.eps, grid)
    if not has_mmatrix_sign_structure(shifted):
        raise SingularSystem("mu I + A(Q) lost its M-matrix sign structure")
    lu = Factorization(shifted)
    for _ in range(cfg.inner_steps):
        w = lu.solve(cfg.mu * w)
    return w / quadrature(w, grid)


def solve_fp_exact(q, problem: StationaryProblem) -> np.ndarray:
    """Unit-mass kernel vector of ``A(Q)`` from the overdetermined system ``[A; int] M = [0; 1]``."""
    grid = problem.grid
    a = assemble_fp_matrix(q, problem.eps, grid)
    weights = sp.csr_matrix(np.full((1, grid.size), grid.cell_volume))
    rhs = np.zeros(grid.size + 1)
    rhs[-1] = 1.0
    return solve_least_squares(sp.vstack([a, weights]), rhs)


def solve_hjb_ergodic(q, m, problem: StationaryProblem):
    """Solve ``A^T(Q) U + Lambda = 0.5|Q_pm|^2 + V + F(M)`` with ``int U = 0``."""
    grid = problem.grid
    n = grid.size
    ones = sp.csr_matrix(np.ones((n, 1)))
    weights = sp.csr_matrix(np.full((1, n), grid.cell_volume))
    bordered = sp.bmat(
        [[assemble_hjb_advection_matrix(q, problem.eps, grid), ones], [weights, None]],
        format="csc",
    )
    rhs = np.concatenate([policy_half_norm_sq(q) + problem.potential + problem.coupling(m), [0.0]])
    sol = solve_square(bordered, rhs)
    return sol[:n], float(sol[n])


def update_policy(u, cap: float, grid: PeriodicGrid) -> np.ndarray:
    """Two-sided gradient of ``u``, rescaled to Euclidean norm ``cap`` where it is larger."""
    if not cap > 0:
        raise ValueError("cap must be positive")
    g = two_sided_gradient(u, grid)
    norms = np.linalg.norm(g, axis=1)
    scale = np.ones_like(norms)
    over = norms > cap
    scale[over] = cap / norms[over]
    return g * scale[:, None]


def stationary_residual(state: StationaryState, problem: StationaryProblem) -> np.ndarray:
    """Residual of the full discrete system, length ``2|G| + 2``."""
    grid = problem.grid
    g = two_sided_gradient(state.u, grid)
    hjb = (
        -problem.eps * discrete_laplacian(state.u, grid)
        + 0.5 * eikonal_hamiltonian(g)
        - problem.potential
        - problem.coupling(state.m)
        + state.lam
    )
    fp = assemble_fp_matrix(g, problem.eps, grid) @ state.m
    return np.concatenate([hjb, fp, [quadrature(state.u, grid), quadrature(state.m, grid) - 1.0]])


def policy_iteration_stationary(problem: StationaryProblem, q0=None, cfg: PiConfig = PiConfig(), callback=None):
    """Policy iteration until the residual 2-norm drops below ``cfg.tol``.

    ``callback(k, state)`` is called after every outer iteration.  Returns
    ``(state, log)``; raises :class:`MaxIterationsExceeded` otherwise.
    """
    grid = problem.grid
    q = np.zeros((grid.size, 2 * grid.dim)) if q0 is None else check_policy_field(q0, grid, "q0")
    if np.any(np.linalg.norm(q, axis=1) > problem.cap * (1 + 1e-12)):
        raise ValueError("initial policy exceeds the cap")
    uniform = np.ones(grid.size)
    w0 = uniform
    conv = ConvergenceLog("residual")
    state = None
    for k in range(1, cfg.max_outer + 1):
        m = solve_fp_mmatrix(q, problem, w0, cfg)
        check_density(m, grid, f"PI iteration {k}")
        u, lam = solve_hjb_ergodic(q, m, problem)
        state = StationaryState(u, m, lam)
        res = residual_norm2(stationary_residual(state, problem))
        conv.record(k, res)
        log.debug("PI iteration %d: residual %.3e", k, res)
        if callback is not None:
            callback(k, state)
        if res < cfg.tol:
            return state, conv
        q = update_policy(u, problem.cap, grid)
        w0 = m if cfg.warm_start_fp else uniform
    raise MaxIterationsExceeded(
        f"policy iteration did not reach {cfg.tol:g} in {cfg.max_outer} iterations", state, conv
    )
