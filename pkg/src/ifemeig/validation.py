"""Input checks shared by the estimator front end."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import InvalidParameterError
from .geometry import LevelSetInterface
from .mesh import Mesh


def check_points(X):
    """Finite float array of shape (n, 2)."""
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 2:
        raise InvalidParameterError(f"points must have 2 columns, got {X.shape[1]}")
    return X


def check_mesh(X):
    """A :class:`Mesh`, built from ``(vertices, triangles)`` if needed."""
    if isinstance(X, Mesh):
        return X
    if isinstance(X, tuple) and len(X) == 2:
        return Mesh(*X)
    raise InvalidParameterError(f"expected a Mesh or (vertices, triangles), got {type(X).__name__}")


def check_positive(value, name, integer=False):
    kind = numbers.Integral if integer else numbers.Real
    if isinstance(value, bool) or not isinstance(value, kind) or not value > 0:
        what = "a positive integer" if integer else "a positive number"
        raise InvalidParameterError(f"{name} must be {what}, got {value!r}")
    return value


def check_interface(iface):
    if iface is None:
        return LevelSetInterface.circle(0.38, beta_minus=1.0, beta_plus=1000.0)
    if not isinstance(iface, LevelSetInterface):
        raise InvalidParameterError(f"interface must be a LevelSetInterface, got {type(iface).__name__}")
    return iface
