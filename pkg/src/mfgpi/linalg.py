"""Sparse square and least-squares solves on top of SuperLU.

Square systems are factorized with ``scipy.sparse.linalg.splu``.  A
factorization whose pivots span more than ``1/(n * machine_eps)`` in
magnitude is treated as singular; this catches structurally rank deficient
systems (for instance the unbordered Fokker-Planck matrix) that rounding
would otherwise let through with a meaningless solution.

Least-squares problems ``min |Ax - b|`` are solved through the augmented
system ``[[alpha I, A], [A^T, 0]] [r/alpha; x] = [b; 0]``, which is square
and nonsingular exactly when ``A`` has full column rank.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import RankDeficient, SingularSystem

SQUARE_RTOL = 1e-12
LSQ_RTOL = 1e-10
_EPS = np.finfo(float).eps


def residual_norm2(f) -> float:
    return float(np.linalg.norm(np.asarray(f, dtype=float)))


def _norm2_bound(a) -> float:
    a = abs(sp.csr_matrix(a))
    one = a.sum(axis=0).max()
    inf = a.sum(axis=1).max()
    return float(np.sqrt(one * inf))


class Factorization:
    """LU factorization of a square sparse matrix, reusable for many right-hand sides."""

    def __init__(self, a, rtol: float = SQUARE_RTOL):
        a = sp.csc_matrix(a, dtype=float)
        n, m = a.shape
        if n != m:
            raise ValueError(f"matrix must be square, got {a.shape}")
        if a.nnz and not np.all(np.isfinite(a.data)):
            raise SingularSystem("matrix has non-finite entries")
        self.matrix = a
        self.rtol = rtol
        self.norm = _norm2_bound(a)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", spla.MatrixRankWarning)
                self._lu = spla.splu(a)
        except (RuntimeError, spla.MatrixRankWarning) as exc:
            raise SingularSystem(f"LU factorization failed: {exc}") from exc
        pivots = np.abs(self._lu.U.diagonal())
        if pivots.min() <= n * _EPS * pivots.max():
            raise SingularSystem(
                f"matrix is numerically singular (pivot ratio {pivots.min() / pivots.max():.2e})"
            )

    def solve(self, b) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        x = self._lu.solve(b)
        r = b - self.matrix @ x
        x = x + self._lu.solve(r)
        r = b - self.matrix @ x
        scale = self.norm * np.linalg.norm(x) + np.linalg.norm(b)
        if not np.all(np.isfinite(x)) or np.linalg.norm(r) > self.rtol * max(scale, np.finfo(float).tiny):
            raise SingularSystem(
                f"residual {np.linalg.norm(r):.3e} exceeds tolerance relative to {scale:.3e}"
            )
        return x


def solve_square(a, b, rtol: float = SQUARE_RTOL) -> np.ndarray:
    """Solve ``a x = b`` with a sparse direct method.

    The normwise backward error ``|Ax - b| / (|A| |x| + |b|)`` of the
    returned solution is at most ``rtol``; otherwise :class:`SingularSystem`
    is raised.
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (a.shape[0],):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({a.shape[0]},)")
    return Factorization(a, rtol).solve(b)


def solve_least_squares(a, b) -> np.ndarray:
    """Minimize ``|a x - b|_2`` for a sparse matrix with ``rows >= cols``.

    The normal-equation residual ``|A^T (Ax - b)|`` of the result is at most
    ``LSQ_RTOL * |A| (|A| |x| + |b|)``; :class:`RankDeficient` is raised when
    the augmented matrix is singular or this bound fails.
    """
    a = sp.csr_matrix(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    if m < n:
        raise ValueError(f"need rows >= cols, got {a.shape}")
    if b.shape != (m,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({m},)")
    # alpha near sigma_min keeps the augmented matrix about as well conditioned as A
    alpha = float(np.max(np.abs(a.data))) * np.sqrt(_EPS) if a.nnz else 1.0
    aug = sp.bmat([[alpha * sp.identity(m), a], [a.T, None]], format="csc")
    try:
        lu = Factorization(aug, rtol=np.inf)
    except SingularSystem as exc:
        raise RankDeficient(f"least-squares matrix lacks full column rank: {exc}") from exc
    sol = lu.solve(np.concatenate([b, np.zeros(n)]))
    x = sol[m:]
    norm = _norm2_bound(a)
    gradient = a.T @ (a @ x - b)
    scale = norm * (norm * np.linalg.norm(x) + np.linalg.norm(b))
    if not np.all(np.isfinite(x)) or np.linalg.norm(gradient) > LSQ_RTOL * max(scale, np.finfo(float).tiny):
        raise RankDeficient(f"normal-equation residual {np.linalg.norm(gradient):.3e} too large")
    return x
