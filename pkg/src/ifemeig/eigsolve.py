"""Generalized symmetric-definite eigenproblems and SPD linear solves."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConvergenceError, DefinitenessError, InvalidParameterError

DENSE_LIMIT = 2000


@dataclass
class EigenSolution:
    """Smallest eigenpairs of ``A x = lambda M x``.

    ``eigenvectors`` has one M-orthonormal column per eigenvalue.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int = 0
    method: str = "dense"
    relative_residuals: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.eigenvalues)


class SPDFactor:
    """Sparse LDL^T-style factorization that also certifies definiteness.

    SuperLU in symmetric mode with ``diag_pivot_thresh=0`` keeps diagonal
    pivots, so ``A`` is positive definite exactly when every pivot is positive.
    """

    def __init__(self, A):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise InvalidParameterError("matrix must be square")
        try:
            self.lu = spla.splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                                options=dict(SymmetricMode=True))
        except RuntimeError as exc:  # exactly singular
            raise DefinitenessError(f"factorization failed: {exc}") from None
        pivots = self.lu.U.diagonal()
        if not np.array_equal(self.lu.perm_r, self.lu.perm_c) or not np.all(pivots > 0):
            raise DefinitenessError(
                f"matrix is not positive definite (min pivot {pivots.min():.3g})")
        self.A = A
        self.n_solves = 0

    def solve(self, b):
        self.n_solves += 1
        return self.lu.solve(np.asarray(b, dtype=float))


def _check_pair(A, M, k):
    if A.shape != M.shape or A.shape[0] != A.shape[1]:
        raise InvalidParameterError(f"A {A.shape} and M {M.shape} must be square and equal")
    n = A.shape[0]
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k must satisfy 1 <= k <= n={n}, got {k}")
    return n


def _dense(A):
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)


def _rayleigh_ritz(A, M, X):
    """M-orthonormal Ritz pairs of the pencil restricted to span(X)."""
    AX = A @ X
    MX = M @ X
    Ah = X.T @ AX
    Mh = X.T @ MX
    Ah = 0.5 * (Ah + Ah.T)
    Mh = 0.5 * (Mh + Mh.T)
    w, Y = la.eigh(Ah, Mh)
    return w, X @ Y


def _residuals(A, M, lam, X):
    R = A @ X - (M @ X) * lam
    res = np.linalg.norm(R, axis=0)
    scale = (spla.norm(A, 1) if sp.issparse(A) else np.linalg.norm(A, 1))
    mscale = (spla.norm(M, 1) if sp.issparse(M) else np.linalg.norm(M, 1))
    rel = res / ((scale + np.abs(lam) * mscale) * np.linalg.norm(X, axis=0))
    return res, rel


def solve_gevp(A, M, k, tol=1e-10, method="auto", maxiter=None):
    """``k`` smallest eigenpairs of the SPD pencil ``(A, M)``.

    ``method`` is ``"dense"``, ``"shift-invert"`` or ``"auto"`` (dense when
    ``n <= 2000``). The shift-invert path runs implicitly restarted Lanczos
    (ARPACK) on ``A^{-1} M`` at shift zero, followed by a Rayleigh-Ritz step.

    Raises
    ------
    DefinitenessError
        If ``A`` or ``M`` is not positive definite.
    ConvergenceError
        If the Krylov iteration does not converge.
    """
    n = _check_pair(A, M, k)
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "shift-invert"
    if method == "dense":
        Ad, Md = _dense(A), _dense(M)
        try:
            # full spectrum: cheap at this size and independent of k
            w, X = la.eigh(Ad, Md)
        except la.LinAlgError as exc:
            raise DefinitenessError(f"M is not positive definite: {exc}") from None
        if w[0] <= 0:
            raise DefinitenessError(f"A is not positive definite (eigenvalue {w[0]:.3g})")
        w, X = w[:k], X[:, :k]
        iterations = 0
    elif method == "shift-invert":
        A = sp.csr_matrix(A)
        M = sp.csr_matrix(M)
        fac = SPDFactor(A)
        op = spla.LinearOperator(A.shape, matvec=fac.solve, dtype=float)
        ncv = min(n, max(2 * k + 10, 30))
        # fixed start vector: ARPACK otherwise draws a random one per call
        v0 = np.random.default_rng(0).standard_normal(n)
        try:
            mu, X = spla.eigsh(A, k=k, M=M, sigma=0.0, which="LM", OPinv=op, tol=tol * 1e-2,
                               ncv=ncv, maxiter=maxiter, v0=v0)
        except spla.ArpackNoConvergence as exc:
            lam = np.asarray(exc.eigenvalues)
            res = _residuals(A, M, lam, exc.eigenvectors)[0] if len(lam) else np.array([])
            raise ConvergenceError(
                f"ARPACK converged {len(lam)} of {k} eigenpairs", residuals=res) from None
        w, X = _rayleigh_ritz(A, M, X)
        if w[0] <= 0:
            raise DefinitenessError(f"A is not positive definite (eigenvalue {w[0]:.3g})")
        iterations = fac.n_solves
    else:
        raise InvalidParameterError(f"unknown method {method!r}")

    order = np.argsort(w, kind="stable")
    w, X = w[order], X[:, order]
    # deterministic sign: largest-magnitude entry positive
    idx = np.argmax(np.abs(X), axis=0)
    X = X * np.sign(X[idx, np.arange(X.shape[1])])
    res, rel = _residuals(A, M, w, X)
    return EigenSolution(w, X, res, iterations, method, rel)


def solve_source(A, b, rtol=1e-12, refine=3):
    """Solve the SPD system ``A x = b`` by sparse direct factorization.

    Iterative refinement is applied until ``||Ax - b|| <= rtol ||b||``.
    """
    b = np.asarray(b, dtype=float)
    if sp.issparse(A):
        fac = SPDFactor(A)
        x = fac.solve(b)
        bn = np.linalg.norm(b)
        for _ in range(refine):
            r = b - A @ x
            if np.linalg.norm(r) <= rtol * bn:
                break
            x = x + fac.solve(r)
        return x
    Ad = np.asarray(A, dtype=float)
    try:
        c = la.cho_factor(Ad)
    except la.LinAlgError as exc:
        raise DefinitenessError(f"matrix is not positive definite: {exc}") from None
    return la.cho_solve(c, b)
