"""Estimator-style front end: fit on a mesh, evaluate on points."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .assembly import assemble_load, assemble_system
from .basis import build_bases
from .eigsolve import solve_gevp, solve_source
from .validation import check_interface, check_mesh, check_points, check_positive


class IFEMEigensolver(BaseEstimator):
    """Smallest eigenpairs of ``-div(beta grad u) = lambda u`` on a mesh.

    Parameters
    ----------
    interface : LevelSetInterface, optional
        Interface and coefficients; defaults to a circle of radius 0.38 with
        ``beta = (1, 1000)``.
    kappa : float
        Penalty factor, ``sigma = kappa * beta``.
    n_eigenvalues : int
    tol : float
        Eigensolver tolerance.
    method : {"auto", "dense", "shift-invert"}
    on_multiple : {"raise", "warn", "ignore"}
        What to do with mesh edges crossed more than once.

    Attributes
    ----------
    eigenvalues_ : (k,) array
    eigenvectors_ : (n_edges, k) array, one value per mesh edge (boundary zeros)
    residuals_ : (k,) array
    n_dofs_ : int
    bases_ : ImmersedBasis
    """

    def __init__(self, interface=None, kappa=1.0, n_eigenvalues=10, tol=1e-10,
                 method="auto", on_multiple="raise"):
        self.interface = interface
        self.kappa = kappa
        self.n_eigenvalues = n_eigenvalues
        self.tol = tol
        self.method = method
        self.on_multiple = on_multiple

    def fit(self, X, y=None):
        """Assemble and solve on the mesh ``X`` (``y`` is ignored)."""
        mesh = check_mesh(X)
        iface = check_interface(self.interface)
        check_positive(self.kappa, "kappa")
        check_positive(self.n_eigenvalues, "n_eigenvalues", integer=True)
        check_positive(self.tol, "tol")
        self.bases_ = build_bases(mesh, iface, on_multiple=self.on_multiple)
        A, M, dofmap = assemble_system(self.bases_, self.kappa)
        sol = solve_gevp(A, M, min(self.n_eigenvalues, dofmap.n_dofs), tol=self.tol,
                         method=self.method)
        self.dofmap_ = dofmap
        self.n_dofs_ = dofmap.n_dofs
        self.eigenvalues_ = sol.eigenvalues
        self.eigenvectors_ = dofmap.expand(sol.eigenvectors)
        self.residuals_ = sol.residuals
        return self

    def transform(self, X):
        """Eigenfunction values at points ``X`` (n, 2) -> (n, k); NaN outside."""
        check_is_fitted(self, "eigenvalues_")
        return self.bases_.evaluate_points(self.eigenvectors_, check_points(X))

    def predict(self, X):
        """Values of the first eigenfunction at ``X``."""
        return self.transform(X)[:, 0]


class IFEMSourceSolver(RegressorMixin, BaseEstimator):
    """Discrete solution of ``-div(beta grad u) = f`` with ``u = 0`` on the boundary.

    ``fit(mesh, f)`` takes the source as a vectorized callable ``f(x, y)``.
    ``predict`` evaluates the solution at points, so ``score`` compares it
    with sampled reference values by the R^2 coefficient.
    """

    def __init__(self, interface=None, kappa=1.0, on_multiple="raise"):
        self.interface = interface
        self.kappa = kappa
        self.on_multiple = on_multiple

    def fit(self, X, y):
        mesh = check_mesh(X)
        if not callable(y):
            raise TypeError("y must be a callable source f(x, y)")
        iface = check_interface(self.interface)
        check_positive(self.kappa, "kappa")
        self.bases_ = build_bases(mesh, iface, on_multiple=self.on_multiple)
        A, _, dofmap = assemble_system(self.bases_, self.kappa)
        u = solve_source(A, dofmap.restrict(assemble_load(self.bases_, y)))
        self.dofmap_ = dofmap
        self.solution_ = dofmap.expand(u)
        return self

    def predict(self, X):
        check_is_fitted(self, "solution_")
        return self.bases_.evaluate_points(self.solution_, check_points(X))
