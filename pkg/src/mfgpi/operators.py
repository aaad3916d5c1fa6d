"""Finite difference operators on the periodic grid.

The Laplacian is the centered 3-point stencil per dimension.  First order
terms use the Engquist-Osher flux: a two-sided gradient ``(D_L, D_R)`` per
dimension whose positive/negative parts enter the Hamiltonian and the
conservative divergence of the Fokker-Planck equation.

Two system matrices are assembled from explicit stencils:

* ``assemble_fp_matrix(q, eps)``  ``A(Q) = -eps*Lap - div(. Q)``
* ``assemble_hjb_advection_matrix(q, eps)``  ``-eps*Lap + Q_L^+ D_L + Q_R^- D_R``

They are built independently of each other, so the identity
``A(Q).T == hjb_matrix(Q)`` is a genuine check of both stencils.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import PeriodicGrid, check_policy_field, negative_part, positive_part


def discrete_laplacian(u: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Apply the periodic 3-point Laplacian, summed over dimensions."""
    out = np.zeros_like(u, dtype=float)
    for axis in range(grid.dim):
        out += u[grid.neighbors(axis, -1)] - 2.0 * u + u[grid.neighbors(axis, 1)]
    return out / grid.h**2


def two_sided_gradient(u: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Left and right difference quotients, shape ``(size, 2*dim)``."""
    g = np.empty((grid.size, 2 * grid.dim))
    for axis in range(grid.dim):
        g[:, 2 * axis] = (u - u[grid.neighbors(axis, -1)]) / grid.h
        g[:, 2 * axis + 1] = (u[grid.neighbors(axis, 1)] - u) / grid.h
    return g


def eikonal_hamiltonian(g: np.ndarray) -> np.ndarray:
    """Engquist-Osher approximation of ``|Du|^2`` from a two-sided gradient."""
    return np.sum(positive_part(g[:, 0::2]) ** 2 + negative_part(g[:, 1::2]) ** 2, axis=1)


def apply_policy_dot_gradient(q: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``Q_L^+ . D_L + Q_R^- . D_R`` per node."""
    return np.sum(positive_part(q[:, 0::2]) * g[:, 0::2] + negative_part(q[:, 1::2]) * g[:, 1::2], axis=1)


def policy_half_norm_sq(q: np.ndarray) -> np.ndarray:
    """``0.5 * |Q_pm|^2`` per node, using the clipped components only."""
    return 0.5 * eikonal_hamiltonian(q)


def merge_policy(q: np.ndarray) -> np.ndarray:
    """Sum the left and right components per dimension, shape ``(size, dim)``."""
    return q[:, 0::2] + q[:, 1::2]


def _parts(q, axis):
    return positive_part(q[:, 2 * axis]), negative_part(q[:, 2 * axis + 1])


def _triplets_to_csr(grid, rows, cols, vals):
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    )
    return mat.tocsr()


def assemble_fp_matrix(q: np.ndarray, eps: float, grid: PeriodicGrid) -> sp.csr_matrix:
    """Matrix of ``M -> -eps*Lap(M) - div(M Q)``; columns sum to zero."""
    q = check_policy_field(q, grid)
    h = grid.h
    node = np.arange(grid.size)
    rows, cols, vals = [], [], []
    for axis in range(grid.dim):
        qlp, qrm = _parts(q, axis)
        left, right = grid.neighbors(axis, -1), grid.neighbors(axis, 1)
        rows += [node, node, node]
        cols += [node, left, right]
        vals += [
            2 * eps / h**2 + (qlp - qrm) / h,
            -eps / h**2 + qrm[left] / h,
            -eps / h**2 - qlp[right] / h,
        ]
    return _triplets_to_csr(grid, rows, cols, vals)


def assemble_hjb_advection_matrix(q: np.ndarray, eps: float, grid: PeriodicGrid) -> sp.csr_matrix:
    """Matrix of ``U -> -eps*Lap(U) + Q_pm . D U``; rows sum to zero."""
    q = check_policy_field(q, grid)
    h = grid.h
    node = np.arange(grid.size)
    rows, cols, vals = [], [], []
    for axis in range(grid.dim):
        qlp, qrm = _parts(q, axis)
        rows += [node, node, node]
        cols += [node, grid.neighbors(axis, -1), grid.neighbors(axis, 1)]
        vals += [
            2 * eps / h**2 + (qlp - qrm) / h,
            -eps / h**2 - qlp / h,
            -eps / h**2 + qrm / h,
        ]
    return _triplets_to_csr(grid, rows, cols, vals)


def laplacian_matrix(grid: PeriodicGrid) -> sp.csr_matrix:
    return assemble_fp_matrix(np.zeros((grid.size, 2 * grid.dim)), 1.0, grid) * -1.0


def shift_matrix(grid: PeriodicGrid, axis: int, step: int) -> sp.csr_matrix:
    """``(S u)_i = u[i + step]`` along ``axis``."""
    n = grid.size
    return sp.csr_matrix((np.ones(n), (np.arange(n), grid.neighbors(axis, step))), shape=(n, n))


def difference_matrices(grid: PeriodicGrid, axis: int):
    """Sparse ``(D_L, D_R)`` along ``axis``."""
    eye = sp.identity(grid.size, format="csr")
    d_left = (eye - shift_matrix(grid, axis, -1)) / grid.h
    d_right = (shift_matrix(grid, axis, 1) - eye) / grid.h
    return d_left.tocsr(), d_right.tocsr()


def divergence(flux: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    """Conservative divergence of a two-sided flux ``(Phi_L, Phi_R)`` per dimension.

    ``(div Phi)_i = (Phi_L[i+1] - Phi_L[i])/h + (Phi_R[i] - Phi_R[i-1])/h``.
    With ``Phi = (M Q_L^+, M Q_R^-)`` this is ``div(M Q)``.
    """
    out = np.zeros(grid.size)
    for axis in range(grid.dim):
        fl, fr = flux[:, 2 * axis], flux[:, 2 * axis + 1]
        out += (fl[grid.neighbors(axis, 1)] - fl) / grid.h
        out += (fr - fr[grid.neighbors(axis, -1)]) / grid.h
    return out
