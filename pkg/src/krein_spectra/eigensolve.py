"""Symmetric-definite eigensolvers and spectrum utilities."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoConvergence, NotPositiveDefinite, SingularShift, ZeroVector

DEFAULT_TOL = 1e-10
MULTIPLET_RTOL = 1e-8


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues, optional B-orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None
    reliable_below: float = math.inf
    converged: bool = True
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return int(self.eigenvalues.size)

    def multiplets(self, rtol=MULTIPLET_RTOL):
        """Group indices of eigenvalues whose consecutive relative gap is below ``rtol``."""
        groups = []
        for i, lam in enumerate(self.eigenvalues):
            if groups and abs(lam - self.eigenvalues[groups[-1][-1]]) <= rtol * max(abs(lam), 1e-300):
                groups[-1].append(i)
            else:
                groups.append([i])
        return groups


def residual(A, B, lam: float, u) -> float:
    """``||Au - lam Bu|| / (||Au|| + |lam| ||Bu||)``."""
    u = np.asarray(u)
    if not np.any(u):
        raise ZeroVector("residual of the zero vector is undefined")
    Au = A @ u
    Bu = B @ u
    denom = np.linalg.norm(Au) + abs(lam) * np.linalg.norm(Bu)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(Au - lam * Bu) / denom)


def counting(eigs, lam: float) -> int:
    """Number of entries of the ascending list ``eigs`` in ``(0, lam]``."""
    eigs = list(eigs)
    return max(0, bisect.bisect_right(eigs, lam) - bisect.bisect_right(eigs, 0.0))


def norm_estimate(A) -> float:
    """Max absolute row sum; bounds the 2-norm of a symmetric matrix."""
    if sp.issparse(A):
        return float(abs(A).sum(axis=1).max()) if A.nnz else 0.0
    A = np.asarray(A)
    return float(np.abs(A).sum(axis=1).max()) if A.size else 0.0


def backward_residuals(A, B, w, U) -> np.ndarray:
    """``||Au - lam Bu|| / (||A||_approx ||u||)`` for each column of ``U``."""
    scale = norm_estimate(A)
    out = np.empty(len(w))
    for j, lam in enumerate(w):
        u = U[:, j]
        r = np.linalg.norm(A @ u - lam * (B @ u))
        d = scale * np.linalg.norm(u)
        out[j] = r / d if d > 0 else (0.0 if r == 0 else math.inf)
    return out


_residuals = backward_residuals


def _dense(M):
    return M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)


def _dense_pencil(A, B, k, largest=False):
    Ad, Bd = _dense(A), _dense(B)
    try:
        R = sla.cholesky(Bd, lower=False)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization of B failed: {exc}") from None
    Y = sla.solve_triangular(R, Ad, trans="T")
    C = sla.solve_triangular(R, Y.T, trans="T")
    C = 0.5 * (C + C.T)
    n = C.shape[0]
    subset = [n - k, n - 1] if largest else [0, k - 1]
    w, Z = sla.eigh(C, subset_by_index=subset)
    U = sla.solve_triangular(R, Z)
    return w, U


def _b_orthonormalize(w, B, bases, passes=2):
    for _ in range(passes):
        for X in bases:
            if X.shape[1]:
                w = w - X @ (X.T @ (B @ w))
    return w


def _lanczos(A, B, k, sigma, tol, maxiter, rng, ncv=None):
    """Shift-invert Lanczos for the ``k`` eigenvalues of ``A u = lam B u`` nearest above ``sigma``.

    Works in the B-inner product on ``(A - sigma B)^{-1} B`` with full
    reorthogonalization; converged Ritz pairs are locked (in order) and the
    next cycle restarts orthogonally to them. A Ritz pair counts as converged
    when its Ritz estimate ``|beta_m s_mi|`` is below ``tol * |theta_i|``.
    """
    n = A.shape[0]
    K = sp.csc_matrix(A - sigma * B)
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SingularShift(f"factorization of A - {sigma}*B failed: {exc}") from None

    def op(x):
        return lu.solve(B @ x)

    ncv = ncv or max(2 * k + 10, 30)
    X = np.zeros((n, 0))
    lams, res = [], []
    steps = 0
    v = rng.standard_normal(n)
    while len(lams) < k:
        v = _b_orthonormalize(v, B, [X])
        nv = math.sqrt(max(float(v @ (B @ v)), 0.0))
        if nv < 1e-300:
            v = _b_orthonormalize(rng.standard_normal(n), B, [X])
            nv = math.sqrt(float(v @ (B @ v)))
        m = min(ncv, n - X.shape[1])
        Vb = np.zeros((n, m))
        Vb[:, 0] = v / nv
        alpha = np.zeros(m)
        beta = np.zeros(m)
        j_end = m
        for j in range(m):
            if steps >= maxiter:
                j_end = j
                break
            w = op(Vb[:, j])
            steps += 1
            alpha[j] = w @ (B @ Vb[:, j])
            w = w - alpha[j] * Vb[:, j]
            if j:
                w = w - beta[j - 1] * Vb[:, j - 1]
            w = _b_orthonormalize(w, B, [X, Vb[:, : j + 1]])
            beta[j] = math.sqrt(max(float(w @ (B @ w)), 0.0))
            if j + 1 < m:
                if beta[j] <= 1e-14 * max(abs(alpha[j]), 1e-300):
                    j_end = j + 1
                    break
                Vb[:, j + 1] = w / beta[j]
        if j_end == 0:
            break
        theta, S = sla.eigh_tridiagonal(alpha[:j_end], beta[: j_end - 1])
        order = np.argsort(-theta)
        theta, S = theta[order], S[:, order]
        Y = Vb[:, :j_end] @ S
        estimates = np.abs(beta[j_end - 1] * S[-1, :])
        restart = np.zeros(n)
        for col in range(Y.shape[1]):
            y = Y[:, col]
            y = y / math.sqrt(float(y @ (B @ y)))
            lam = float(y @ (A @ y))
            r = float(estimates[col] / max(abs(theta[col]), 1e-300))
            if theta[col] > 0 and r <= tol and len(lams) < k:
                X = np.column_stack([X, y])
                lams.append(lam)
                res.append(r)
            else:
                restart = Y[:, col : min(col + k - len(lams), Y.shape[1])].sum(axis=1)
                break
        if len(lams) >= k:
            break
        if steps >= maxiter:
            order = np.argsort(lams)
            partial = Spectrum(np.array(lams)[order], X[:, order], np.array(res)[order], converged=False)
            raise NoConvergence(f"{len(lams)} of {k} eigenpairs converged in {steps} Lanczos steps", partial)
        v = restart if np.any(restart) else rng.standard_normal(n)
    order = np.argsort(lams)
    return np.array(lams)[order], X[:, order], np.array(res)[order], steps


def solve_pencil(
    A,
    B,
    k: int,
    tol: float = DEFAULT_TOL,
    mode: str = "dense",
    sigma: float = 0.0,
    reliable_below: float = math.inf,
    seed: int = 0,
    maxiter: Optional[int] = None,
) -> Spectrum:
    """The ``k`` smallest eigenpairs of ``A u = lam B u`` (``B`` positive definite).

    ``mode="dense"`` factors ``B = R^T R`` and diagonalizes ``R^-T A R^-1``.
    ``mode="iterative"`` runs shift-invert Lanczos about ``sigma`` with at most
    ``maxiter`` (default ``50 k``) operator applications.
    """
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if mode == "dense":
        w, U = _dense_pencil(A, B, k)
        meta = {"mode": "dense"}
    elif mode == "iterative":
        if k >= n - 1:
            w, U = _dense_pencil(A, B, k)
            meta = {"mode": "dense-fallback"}
        else:
            rng = np.random.default_rng(seed)
            w, U, _, steps = _lanczos(A, B, k, sigma, tol, maxiter or 50 * k, rng)
            meta = {"mode": "iterative", "lanczos_steps": steps, "sigma": sigma}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    res = _residuals(A, B, w, U)
    return Spectrum(
        eigenvalues=np.asarray(w, dtype=float),
        eigenvectors=U,
        residuals=res,
        reliable_below=reliable_below,
        converged=bool(np.all(res <= tol)),
        meta=meta,
    )


def _gershgorin_lower(M):
    M = sp.csr_matrix(M)
    d = M.diagonal()
    off = np.asarray(abs(M).sum(axis=1)).ravel() - np.abs(d)
    return float(np.min(d - off))


def solve_symmetric(M, k: int, tol: float = DEFAULT_TOL, largest: bool = False, mode: str = "dense", seed: int = 0) -> Spectrum:
    """The ``k`` algebraically smallest (or largest) eigenpairs of a symmetric ``M``."""
    n = M.shape[0]
    if mode == "dense" or k >= n - 1:
        w, U = _dense_pencil(M, np.eye(n), k, largest=largest)
        if largest:
            w, U = w[::-1], U[:, ::-1]
    else:
        Ms = -sp.csr_matrix(M) if largest else sp.csr_matrix(M)
        sigma = _gershgorin_lower(Ms) - 1.0
        rng = np.random.default_rng(seed)
        w, U, _, _ = _lanczos(Ms, sp.identity(n, format="csr"), k, sigma, tol, 50 * k, rng)
        if largest:
            w = -w
    res = _residuals(M, sp.identity(n, format="csr"), w, U)
    return Spectrum(np.asarray(w, dtype=float), U, res, converged=bool(np.all(res <= tol)))


def b_orthogonality_error(spectrum: Spectrum, B) -> float:
    """``max_{i != j} |u_i^T B u_j|``."""
    U = spectrum.eigenvectors
    G = U.T @ (B @ U)
    np.fill_diagonal(G, 0.0)
    return float(np.abs(G).max()) if G.size else 0.0
