"""Crouzeix-Raviart shape functions, standard and immersed.

Every shape function is stored as one affine piece ``a + b*x + c*y`` per side
of the interface. Coefficient arrays have shape ``(..., 2, 3, 3)`` indexed by
``[side (0: minus, 1: plus), local basis i, (a, b, c)]``; on non-interface
elements both side slots hold the same piece. Local basis ``i`` belongs to
local edge ``i``, the edge opposite vertex ``i``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError, SingularBasisError
from .geometry import INTERFACE, ElementDecomposition, _as_triangle, cut_mesh

CONSTRAINT_TOL = 1e-10


def side_index(side):
    """Map sides ``-1/+1`` to coefficient slots ``0/1``."""
    return (np.asarray(side) > 0).astype(np.intp)


def _cr_coefficients(P):
    """Standard CR coefficients ``phi_i = 1 - 2 lambda_i`` for triangles (m, 3, 2)."""
    m = len(P)
    V = np.concatenate([np.ones((m, 3, 1)), P], axis=2)
    lam = np.linalg.inv(V)  # column i holds the coefficients of lambda_i
    coef = -2.0 * np.swapaxes(lam, 1, 2)
    coef[:, :, 0] += 1.0
    return coef


def _row(w, pts, c, s):
    """``w * [1, x~, y~]`` rows for points in scaled local coordinates."""
    q = (pts - c) / s[:, None]
    return w[:, None] * np.column_stack([np.ones(len(q)), q])


def _immersed_coefficients(P, lone, D, E, lone_side, beta_minus, beta_plus, elements=None):
    """Solve the immersed-basis constraint systems for a batch of cut triangles.

    Unknowns are the lone-side piece and the other-side piece. Constraints:
    equal values at ``D``, equal tangential derivative along ``DE`` (together:
    continuity on the chord), flux continuity across ``DE`` and the three
    edge averages. Returns coefficients of shape (m, 2, 3, 3).
    """
    m = len(P)
    rows = np.arange(m)
    Q0, Q1, Q2 = P[rows, lone], P[rows, (lone + 1) % 3], P[rows, (lone + 2) % 3]
    c = (Q0 + Q1 + Q2) / 3.0
    s = np.max(np.stack([np.hypot(*(Q1 - Q0).T), np.hypot(*(Q2 - Q1).T),
                         np.hypot(*(Q0 - Q2).T)]), axis=0)
    beta_l = np.where(lone_side < 0, beta_minus, beta_plus)
    beta_o = np.where(lone_side < 0, beta_plus, beta_minus)
    bmax = max(beta_minus, beta_plus)

    tau = E - D
    tlen = np.hypot(tau[:, 0], tau[:, 1])
    if np.any(tlen <= 0):
        bad = int(np.flatnonzero(tlen <= 0)[0])
        raise SingularBasisError(
            "interface chord has zero length",
            element=None if elements is None else int(elements[bad]),
            geometry=(P[bad], D[bad], E[bad]))
    tau = tau / tlen[:, None]
    nrm = np.column_stack([-tau[:, 1], tau[:, 0]])
    zero = np.zeros(m)
    one = np.ones(m)

    A = np.zeros((m, 6, 6))
    vD = _row(one, D, c, s)
    A[:, 0, :3], A[:, 0, 3:] = vD, -vD
    # derivatives in scaled coordinates; the common factor 1/s drops out
    A[:, 1, :3] = np.column_stack([zero, tau])
    A[:, 1, 3:] = -A[:, 1, :3]
    A[:, 2, :3] = np.column_stack([zero, (beta_l / bmax)[:, None] * nrm])
    A[:, 2, 3:] = -np.column_stack([zero, (beta_o / bmax)[:, None] * nrm])
    # rolled edge 0: Q1-Q2, uncut, lies on the other side
    A[:, 3, 3:] = _row(one, 0.5 * (Q1 + Q2), c, s)
    # rolled edge 1: Q2-Q0 holds E;  rolled edge 2: Q0-Q1 holds D
    for r, X, Qf in ((4, E, Q2), (5, D, Q1)):
        L = np.hypot(*(Qf - Q0).T)
        w = np.hypot(*(X - Q0).T) / L
        A[:, r, :3] = _row(w, 0.5 * (Q0 + X), c, s)
        A[:, r, 3:] = _row(1.0 - w, 0.5 * (X + Qf), c, s)
    rhs = np.zeros((m, 6, 3))
    rhs[:, 3:, :] = np.eye(3)

    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        sol = None
    if sol is None or not np.all(np.isfinite(sol)):
        cond = np.linalg.cond(A)
        bad = int(np.argmax(cond))
        raise SingularBasisError(
            f"singular immersed-basis system (cond={cond[bad]:.3g})",
            element=None if elements is None else int(elements[bad]),
            geometry=(P[bad], D[bad], E[bad]))
    resid = np.abs(np.einsum("mij,mjk->mik", A, sol) - rhs).max(axis=(1, 2))
    if np.any(resid >= CONSTRAINT_TOL):
        bad = int(np.argmax(resid))
        warnings.warn(
            f"immersed basis constraint residual {resid[bad]:.3g} on element "
            f"{bad if elements is None else int(elements[bad])}", RuntimeWarning, stacklevel=3)

    # back to global coordinates: a + b x + c y
    sol = sol.reshape(m, 2, 3, 3)  # (m, piece, coef, rolled basis)
    b = sol[:, :, 1, :] / s[:, None, None]
    cc = sol[:, :, 2, :] / s[:, None, None]
    a = sol[:, :, 0, :] - b * c[:, 0, None, None] - cc * c[:, 1, None, None]
    pieces = np.stack([a, b, cc], axis=-1)  # (m, piece, rolled basis, 3)

    out = np.empty((m, 2, 3, 3))
    lone_slot = side_index(lone_side)
    for ir in range(3):
        i = (lone + ir) % 3
        out[rows, lone_slot, i] = pieces[:, 0, ir]
        out[rows, 1 - lone_slot, i] = pieces[:, 1, ir]
    return out


@dataclass
class LocalBasisSet:
    """Three shape functions on one triangle, one affine piece per side."""

    coef: np.ndarray                   # (2, 3, 3)
    decomposition: ElementDecomposition | None = None

    def value(self, i, x, y, side):
        a, b, c = self.coef[side_index(side), i].T
        return a + b * np.asarray(x) + c * np.asarray(y)

    def gradient(self, i, side):
        return self.coef[side_index(side), i, 1:]

    def side_of(self, x, y):
        """Side of points relative to the chord (or the element's side)."""
        d = self.decomposition
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if d is None or not d.is_interface:
            side = d.side if d is not None else 1
            return np.full(np.broadcast(x, y).shape, side, dtype=np.int8)
        P = d.triangle[d.lone]
        nrm = np.array([-(d.E - d.D)[1], (d.E - d.D)[0]])
        lone_pos = np.sign(nrm @ (P - d.D))
        pos = np.sign((x - d.D[0]) * nrm[0] + (y - d.D[1]) * nrm[1])
        return np.where(pos == lone_pos, d.lone_side, -d.lone_side).astype(np.int8)

    def __call__(self, i, x, y):
        """Evaluate shape function ``i``, choosing the piece by chord side."""
        return self.value(i, x, y, self.side_of(x, y))


def standard_cr_basis(triangle):
    """Standard CR basis ``phi_i = 1 - 2 lambda_i`` on a triangle."""
    P = _as_triangle(triangle)
    coef = _cr_coefficients(P[None])[0]
    return LocalBasisSet(np.stack([coef, coef]), None)


def immersed_basis(decomp, beta_minus, beta_plus):
    """Immersed basis on an interface element (standard CR otherwise)."""
    if not (beta_minus > 0 and beta_plus > 0):
        raise InvalidParameterError("beta_minus and beta_plus must be positive")
    P = decomp.triangle
    if not decomp.is_interface:
        coef = _cr_coefficients(P[None])[0]
        return LocalBasisSet(np.stack([coef, coef]), decomp)
    coef = _immersed_coefficients(
        P[None], np.array([decomp.lone]), decomp.D[None], decomp.E[None],
        np.array([decomp.lone_side]), beta_minus, beta_plus)[0]
    return LocalBasisSet(coef, decomp)


class ImmersedBasis:
    """Immersed CR shape functions for every triangle of a mesh.

    Parameters
    ----------
    mesh : Mesh
    iface : LevelSetInterface
    cut : MeshCut, optional
        Precomputed cut; built from ``mesh`` and ``iface`` when omitted.
    on_multiple : {"raise", "warn", "ignore"}
        Policy for edges crossed more than once, see :func:`edge_crossings`.
    """

    def __init__(self, mesh, iface, cut=None, on_multiple="raise"):
        self.mesh = mesh
        self.iface = iface
        self.cut = cut_mesh(mesh, iface, on_multiple) if cut is None else cut
        P = mesh.vertices[mesh.triangles]
        std = _cr_coefficients(P)
        coef = np.repeat(std[:, None], 2, axis=1)
        ie = self.cut.interface_elements
        if ie.size:
            coef[ie] = _immersed_coefficients(
                P[ie], self.cut.lone[ie], self.cut.D[ie], self.cut.E[ie],
                self.cut.lone_side[ie], iface.beta_minus, iface.beta_plus, elements=ie)
        self.coef = coef

    @property
    def n_elements(self):
        return self.mesh.n_triangles

    @property
    def interface_elements(self):
        return self.cut.interface_elements

    def local(self, k):
        """:class:`LocalBasisSet` of element ``k``."""
        return LocalBasisSet(self.coef[k], self.cut.decomposition(self.mesh, k))

    def sub_coefficients(self):
        """Coefficients (ns, 3, 3) of the pieces active on each sub-triangle."""
        c = self.cut
        return self.coef[c.sub_elem, side_index(c.sub_side)]

    def side_at(self, elems, x, y):
        """Side (-1/+1) of points ``(x, y)`` lying in elements ``elems``.

        Inside interface elements the side is decided by the chord ``DE``.
        """
        c = self.cut
        elems = np.asarray(elems, dtype=np.intp)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        side = c.elem_class[elems].astype(np.int8)
        inter = side == INTERFACE
        if np.any(inter):
            k = elems[inter]
            D, E = c.D[k], c.E[k]
            nx, ny = -(E - D)[:, 1], (E - D)[:, 0]
            P = self.mesh.vertices[self.mesh.triangles[k, c.lone[k]]]
            lone_pos = np.sign(nx * (P[:, 0] - D[:, 0]) + ny * (P[:, 1] - D[:, 1]))
            pos = np.sign(nx * (x[inter] - D[:, 0]) + ny * (y[inter] - D[:, 1]))
            side[inter] = np.where(pos == lone_pos, c.lone_side[k], -c.lone_side[k])
        return side

    def evaluate(self, u, elems, sides, x, y):
        """Values of the discrete function ``u`` (one value per edge).

        ``elems``, ``sides``, ``x`` and ``y`` are broadcast-compatible arrays.
        """
        u = np.asarray(u, dtype=float)
        C = self.coef[elems, side_index(sides)]            # (..., 3, 3)
        U = u[self.mesh.tri_edges[elems]]                  # (..., 3)
        vals = C[..., 0] + C[..., 1] * np.asarray(x)[..., None] + C[..., 2] * np.asarray(y)[..., None]
        return np.sum(U * vals, axis=-1)

    def evaluate_points(self, u, points):
        """Values of ``u`` (per edge; a 2-D ``u`` gives one column per function)
        at arbitrary points; NaN outside the mesh."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = np.asarray(u, dtype=float)
        elems = self.mesh.locate(pts)
        inside = elems >= 0
        out = np.full((len(pts),) + u.shape[1:], np.nan)
        if np.any(inside):
            e = elems[inside]
            x, y = pts[inside, 0], pts[inside, 1]
            sides = self.side_at(e, x, y)
            C = self.coef[e, side_index(sides)]                       # (m, 3, 3)
            phi = C[..., 0] + C[..., 1] * x[:, None] + C[..., 2] * y[:, None]
            U = u[self.mesh.tri_edges[e]]                             # (m, 3, ...)
            out[inside] = np.einsum("mi,mi...->m...", phi, U)
        return out

    def evaluate_gradient(self, u, elems, sides):
        u = np.asarray(u, dtype=float)
        C = self.coef[elems, side_index(sides)]
        U = u[self.mesh.tri_edges[elems]]
        return np.einsum("...i,...ij->...j", U, C[..., 1:])


def build_bases(mesh, iface, on_multiple="raise"):
    """Cut ``mesh`` by ``iface`` and construct all local bases."""
    return ImmersedBasis(mesh, iface, on_multiple=on_multiple)


_GL4_X, _GL4_W = np.polynomial.legendre.leggauss(4)
_GL4_X = 0.5 * (_GL4_X + 1.0)
_GL4_W = 0.5 * _GL4_W


def edge_segments(mesh, cut):
    """Edges split at their interface crossing.

    Returns ``(edge, p0, p1, side)`` arrays, one row per straight sub-segment of
    positive length; ``side`` is the side of the segment's mesh vertex.
    """
    V = mesh.vertices
    e = np.arange(mesh.n_edges)
    a = V[mesh.edges[:, 0]]
    b = V[mesh.edges[:, 1]]
    sa = cut.vertex_side[mesh.edges[:, 0]]
    sb = cut.vertex_side[mesh.edges[:, 1]]
    split = ~np.isnan(cut.edge_t)
    X = np.where(split[:, None], cut.edge_point, b)
    edge = np.concatenate([e, e[split]])
    p0 = np.concatenate([a, X[split]])
    p1 = np.concatenate([X, b[split]])
    side = np.concatenate([sa, sb[split]])
    L = np.hypot(*(p1 - p0).T)
    full = mesh.edge_lengths[edge]
    keep = L > 1e-14 * full
    order = np.argsort(edge[keep], kind="stable")
    return edge[keep][order], p0[keep][order], p1[keep][order], side[keep][order]


def interpolate(bases, f):
    """Edge-average interpolant of ``f``; one DOF per mesh edge.

    Each edge is split at its interface crossing and integrated with a 4-point
    Gauss rule per straight piece.
    """
    mesh = bases.mesh
    edge, p0, p1, _ = edge_segments(mesh, bases.cut)
    pts = p0[:, None, :] + _GL4_X[None, :, None] * (p1 - p0)[:, None, :]
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, pts.shape[:2])
    seg_len = np.hypot(*(p1 - p0).T)
    integral = seg_len * (vals @ _GL4_W)
    total = np.bincount(edge, weights=integral, minlength=mesh.n_edges)
    return total / mesh.edge_lengths
