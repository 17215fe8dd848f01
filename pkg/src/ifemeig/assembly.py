"""Global sparse matrices, load vectors and error norms.

All integrals are evaluated over the sub-triangulation of the mesh, so each
shape-function piece is integrated only over its own side of the chord.
Matrices are assembled over *all* edges and reduced to interior-edge DOFs by
:class:`DofMap` (boundary DOFs are eliminated, i.e. set to zero).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .basis import edge_segments, side_index
from .exceptions import InvalidParameterError
from .geometry import _triangle_area

# barycentric rules on the reference triangle, weights sum to one
QUAD_DEG2 = (
    np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
    np.full(3, 1 / 3),
)
_a1, _w1 = 0.445948490915964886318329253883, 0.223381589678011465944657818578
_a2, _w2 = 0.091576213509770743459571463402, 0.109951743655321867638675514755
QUAD_DEG4 = (
    np.array([[_a1, _a1, 1 - 2 * _a1], [_a1, 1 - 2 * _a1, _a1], [1 - 2 * _a1, _a1, _a1],
              [_a2, _a2, 1 - 2 * _a2], [_a2, 1 - 2 * _a2, _a2], [1 - 2 * _a2, _a2, _a2]]),
    np.array([_w1] * 3 + [_w2] * 3),
)
_GL2_X = 0.5 + np.array([-0.5, 0.5]) / np.sqrt(3.0)
_GL2_W = np.array([0.5, 0.5])


class DofMap:
    """Interior edges numbered consecutively; boundary edges are eliminated."""

    def __init__(self, mesh):
        self.n_edges = mesh.n_edges
        self.dof_to_edge = mesh.interior_edges
        self.edge_to_dof = np.full(mesh.n_edges, -1, dtype=np.int64)
        self.edge_to_dof[self.dof_to_edge] = np.arange(len(self.dof_to_edge))

    @property
    def n_dofs(self):
        return len(self.dof_to_edge)

    def restrict(self, obj):
        """Interior block of an edge-indexed matrix or vector."""
        if sp.issparse(obj):
            idx = self.dof_to_edge
            return obj.tocsr()[idx][:, idx].tocsr()
        return np.asarray(obj)[..., self.dof_to_edge]

    def expand(self, u):
        """Edge vector with zeros on boundary edges."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] == self.n_edges:
            return u
        if u.shape[0] != self.n_dofs:
            raise InvalidParameterError(
                f"vector of length {u.shape[0]} matches neither {self.n_dofs} DOFs "
                f"nor {self.n_edges} edges")
        out = np.zeros((self.n_edges,) + u.shape[1:])
        out[self.dof_to_edge] = u
        return out


def _sub_geometry(bases):
    cut = bases.cut
    xy = cut.sub_xy
    area = np.abs(_triangle_area(xy))
    return xy, area, bases.sub_coefficients()


def _quad_points(xy, rule):
    bary, w = rule
    return np.einsum("qk,skd->sqd", bary, xy), w


def _piece_values(C, pts):
    """Values (s, q, 3) of the three pieces ``C`` (s, 3, 3) at points (s, q, 2)."""
    return (C[:, None, :, 0] + C[:, None, :, 1] * pts[..., 0, None]
            + C[:, None, :, 2] * pts[..., 1, None])


def _scatter(local, dofs, n):
    """Sum local matrices (m, k, k) into an (n, n) matrix, then symmetrize."""
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    A = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    return ((A + A.T) * 0.5).tocsr()


def element_matrices(bases):
    """Local stiffness and mass matrices, each (nt, 3, 3).

    Stiffness uses the constant gradients of each piece; mass uses a degree-2
    rule per sub-triangle, exact for products of affine functions.
    """
    cut = bases.cut
    xy, area, C = _sub_geometry(bases)
    beta = bases.iface.beta(cut.sub_side)
    G = C[:, :, 1:]
    K_sub = (beta * area)[:, None, None] * np.einsum("sid,sjd->sij", G, G)
    pts, w = _quad_points(xy, QUAD_DEG2)
    Vq = _piece_values(C, pts)
    M_sub = area[:, None, None] * np.einsum("q,sqi,sqj->sij", w, Vq, Vq)
    nt = bases.mesh.n_triangles
    K = np.zeros((nt, 3, 3))
    M = np.zeros((nt, 3, 3))
    np.add.at(K, cut.sub_elem, K_sub)
    np.add.at(M, cut.sub_elem, M_sub)
    return K, M


def assemble_stiffness(bases):
    """Matrix of ``sum_K int_K beta grad u . grad v`` over all edges."""
    K, _ = element_matrices(bases)
    mesh = bases.mesh
    return _scatter(K, mesh.tri_edges, mesh.n_edges)


def assemble_mass(bases):
    _, M = element_matrices(bases)
    mesh = bases.mesh
    return _scatter(M, mesh.tri_edges, mesh.n_edges)


def _interior_segments(bases):
    mesh = bases.mesh
    edge, p0, p1, side = edge_segments(mesh, bases.cut)
    interior = mesh.edge_tris[edge, 1] >= 0
    return edge[interior], p0[interior], p1[interior], side[interior]


def _jump_traces(bases, edge, p0, p1, side, xq):
    """Traces (s, q, 6) of ``[phi^K1_i, -phi^K2_j]`` at points along segments."""
    mesh = bases.mesh
    pts = p0[:, None, :] + xq[None, :, None] * (p1 - p0)[:, None, :]
    slot = side_index(side)
    K1 = mesh.edge_tris[edge, 0]
    K2 = mesh.edge_tris[edge, 1]
    v1 = _piece_values(bases.coef[K1, slot], pts)
    v2 = _piece_values(bases.coef[K2, slot], pts)
    dofs = np.concatenate([mesh.tri_edges[K1], mesh.tri_edges[K2]], axis=1)
    return np.concatenate([v1, -v2], axis=2), dofs


def assemble_penalty(bases, kappa=1.0):
    """Matrix of ``sum_e int_e (sigma/|e|) [u][v] ds`` over interior edges.

    ``sigma = kappa * beta`` pointwise: edges crossed by the interface are
    split at the crossing and each piece uses its own coefficient.
    """
    if not kappa > 0:
        raise InvalidParameterError(f"kappa must be positive, got {kappa!r}")
    mesh = bases.mesh
    edge, p0, p1, side = _interior_segments(bases)
    B, dofs = _jump_traces(bases, edge, p0, p1, side, _GL2_X)
    seg_len = np.hypot(*(p1 - p0).T)
    sigma = kappa * bases.iface.beta(side)
    scale = sigma * seg_len / mesh.edge_lengths[edge]
    local = scale[:, None, None] * np.einsum("q,sqi,sqj->sij", _GL2_W, B, B)
    return _scatter(local, dofs, mesh.n_edges)


def assemble_load(bases, f):
    """Vector of ``int f phi_i`` over all edges, degree-4 rule per sub-triangle."""
    xy, area, C = _sub_geometry(bases)
    pts, w = _quad_points(xy, QUAD_DEG4)
    fq = np.broadcast_to(np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float), pts.shape[:2])
    Vq = _piece_values(C, pts)
    local = area[:, None] * np.einsum("q,sq,sqi->si", w, fq, Vq)
    dofs = bases.mesh.tri_edges[bases.cut.sub_elem]
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=bases.mesh.n_edges)


def assemble_system(bases, kappa=1.0):
    """Interior-DOF matrices ``A = stiffness + penalty`` and ``M``.

    Returns ``(A, M, dofmap)``.
    """
    dofmap = DofMap(bases.mesh)
    A = assemble_stiffness(bases) + assemble_penalty(bases, kappa)
    M = assemble_mass(bases)
    return dofmap.restrict(A), dofmap.restrict(M), dofmap


class ErrorNorms(NamedTuple):
    """Error of a discrete function against an exact one.

    ``norm_1j`` combines the L2 error, the broken gradient error and the
    ``1/|e|``-weighted jumps across interior edges.
    """

    l2: float
    norm_1j: float
    h1_semi: float
    jump: float

    @property
    def h1_broken(self):
        return float(np.hypot(self.l2, self.h1_semi))


def broken_norms(bases, u_h, u_exact, grad_exact):
    """Errors of the edge vector ``u_h`` against ``u_exact``.

    ``u_exact(x, y)`` and ``grad_exact(x, y) -> (gx, gy)`` must be vectorized.
    ``u_h`` may hold one value per edge or per interior DOF.
    """
    mesh = bases.mesh
    u = DofMap(mesh).expand(u_h)
    cut = bases.cut
    xy, area, C = _sub_geometry(bases)
    pts, w = _quad_points(xy, QUAD_DEG4)
    U = u[mesh.tri_edges[cut.sub_elem]]                         # (s, 3)
    uh = np.einsum("si,sqi->sq", U, _piece_values(C, pts))
    grad_h = np.einsum("si,sid->sd", U, C[:, :, 1:])              # constant per piece
    ue = np.broadcast_to(np.asarray(u_exact(pts[..., 0], pts[..., 1]), dtype=float), uh.shape)
    g = grad_exact(pts[..., 0], pts[..., 1])
    gx, gy = (g[..., 0], g[..., 1]) if isinstance(g, np.ndarray) and g.shape[-1:] == (2,) else g
    l2 = np.sum(area * ((uh - ue) ** 2 @ w))
    h1 = np.sum(area * (((grad_h[:, None, 0] - gx) ** 2 + (grad_h[:, None, 1] - gy) ** 2) @ w))

    edge, p0, p1, side = _interior_segments(bases)
    B, dofs = _jump_traces(bases, edge, p0, p1, side, _GL2_X)
    jumps = np.einsum("sqi,si->sq", B, u[dofs])
    seg_len = np.hypot(*(p1 - p0).T)
    jump = np.sum(seg_len / mesh.edge_lengths[edge] * (jumps ** 2 @ _GL2_W))
    return ErrorNorms(float(np.sqrt(l2)), float(np.sqrt(l2 + h1 + jump)),
                      float(np.sqrt(h1)), float(np.sqrt(jump)))


def l2_norm(bases, u_h):
    """L2 norm of a discrete function."""
    return broken_norms(bases, u_h, lambda x, y: 0.0 * x,
                        lambda x, y: (0.0 * x, 0.0 * y)).l2

