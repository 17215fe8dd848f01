"""Triangular meshes with edge topology, generators and a text format.

Text format (whitespace separated, ``#`` starts a comment)::

    nv nt
    x y          # nv lines
    i j k        # nt lines, 0-based, counter-clockwise
"""

from __future__ import annotations

import numpy as np

from .exceptions import InvalidMeshError, InvalidParameterError, MeshParseError
from .geometry import _triangle_area


class Mesh:
    """Conforming triangulation with edges numbered lexicographically.

    Attributes
    ----------
    vertices : (nv, 2) float array
    triangles : (nt, 3) int array, counter-clockwise
    edges : (ne, 2) int array, sorted vertex pairs in lexicographic order
    tri_edges : (nt, 3) int array, local edge ``j`` is opposite vertex ``j``
    edge_tris : (ne, 2) int array, incident triangles (``-1`` if boundary)
    """

    def __init__(self, vertices, triangles):
        V = np.ascontiguousarray(vertices, dtype=float)
        T = np.ascontiguousarray(triangles, dtype=np.int64)
        if V.ndim != 2 or V.shape[1] != 2 or len(V) == 0:
            raise InvalidMeshError("vertices must be a non-empty (nv, 2) array")
        if T.ndim != 2 or T.shape[1] != 3 or len(T) == 0:
            raise InvalidMeshError("triangles must be a non-empty (nt, 3) array")
        if T.min() < 0 or T.max() >= len(V):
            raise InvalidMeshError("triangle references a vertex out of range")
        area = _triangle_area(V[T])
        if np.any(area <= 0):
            raise InvalidMeshError(
                f"{np.sum(area <= 0)} triangle(s) with non-positive area "
                f"(first: {int(np.flatnonzero(area <= 0)[0])})")
        self.vertices = V
        self.triangles = T
        self.areas = area
        self._build_edges()
        self.vertices.setflags(write=False)
        self.triangles.setflags(write=False)

    def _build_edges(self):
        T = self.triangles
        nt = len(T)
        local = np.stack([T[:, [1, 2]], T[:, [2, 0]], T[:, [0, 1]]], axis=1)  # (nt, 3, 2)
        pairs = np.sort(local.reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if np.any(counts > 2):
            raise InvalidMeshError("non-manifold mesh: an edge is shared by more than two triangles")
        tri_edges = inverse.reshape(nt, 3)
        owner = np.repeat(np.arange(nt), 3)
        edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
        order = np.argsort(inverse, kind="stable")
        e_sorted = inverse[order]
        first = np.r_[True, e_sorted[1:] != e_sorted[:-1]]
        edge_tris[e_sorted[first], 0] = owner[order][first]
        edge_tris[e_sorted[~first], 1] = owner[order][~first]
        # a shared edge must be traversed in opposite directions by its two triangles
        directed = local.reshape(-1, 2)
        dir_sorted = directed[order]
        second = ~first
        prev = np.flatnonzero(second) - 1
        if np.any(np.all(dir_sorted[second] == dir_sorted[prev], axis=1)):
            raise InvalidMeshError("inconsistent orientation across a shared edge")
        self.edges = edges
        self.tri_edges = tri_edges
        self.edge_tris = edge_tris
        self.edges.setflags(write=False)
        self.tri_edges.setflags(write=False)
        self.edge_tris.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def boundary_edges(self):
        return np.flatnonzero(self.edge_tris[:, 1] < 0)

    @property
    def interior_edges(self):
        return np.flatnonzero(self.edge_tris[:, 1] >= 0)

    @property
    def edge_lengths(self):
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def diameters(self):
        P = self.vertices[self.triangles]
        d = np.stack([np.hypot(*(P[:, (j + 1) % 3] - P[:, (j + 2) % 3]).T) for j in range(3)], axis=1)
        return d.max(axis=1)

    @property
    def h_max(self):
        return float(self.diameters.max())

    @property
    def inradii(self):
        P = self.vertices[self.triangles]
        perim = sum(np.hypot(*(P[:, (j + 1) % 3] - P[:, (j + 2) % 3]).T) for j in range(3))
        return 2.0 * self.areas / perim

    def locate(self, points, tol=1e-12):
        """Index of a triangle containing each point, ``-1`` if outside.

        Candidates are the nearest centroids (k-d tree); a barycentric test with
        relative tolerance ``tol`` decides, so points on shared edges go to one
        of their triangles.
        """
        from scipy.spatial import cKDTree

        pts = np.atleast_2d(np.asarray(points, dtype=float))
        P = self.vertices[self.triangles]
        if not hasattr(self, "_tree"):
            self._tree = cKDTree(P.mean(axis=1))
        kq = min(12, self.n_triangles)
        _, cand = self._tree.query(pts, k=kq)
        cand = cand.reshape(len(pts), kq)
        out = np.full(len(pts), -1, dtype=np.int64)
        for j in range(kq):
            todo = np.flatnonzero(out < 0)
            if todo.size == 0:
                break
            t = cand[todo, j]
            bary = _barycentric(P[t], pts[todo])
            ok = np.all(bary >= -tol, axis=1)
            out[todo[ok]] = t[ok]
        # exhaustive fallback for points missed by the candidate search
        for i in np.flatnonzero(out < 0):
            bary = _barycentric(P, np.broadcast_to(pts[i], (len(P), 2)))
            hit = np.flatnonzero(np.all(bary >= -tol, axis=1))
            if hit.size:
                out[i] = hit[0]
        return out

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (self.vertices.shape == other.vertices.shape
                and self.triangles.shape == other.triangles.shape
                and np.array_equal(self.vertices, other.vertices)
                and np.array_equal(self.triangles, other.triangles))

    def __repr__(self):
        return (f"Mesh(nv={self.n_vertices}, nt={self.n_triangles}, "
                f"ne={self.n_edges}, h_max={self.h_max:.4g})")


def _barycentric(P, pts):
    """Barycentric coordinates (m, 3) of points (m, 2) in triangles (m, 3, 2)."""
    a, b, c = P[:, 0], P[:, 1], P[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    l1 = ((pts[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (pts[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])) / det
    l2 = ((b[:, 0] - a[:, 0]) * (pts[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (pts[:, 0] - a[:, 0])) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=1)


def gen_square_mesh(n, domain=(-1.0, 1.0)):
    """Uniform mesh of ``[a, b]^2`` with ``n`` cells per side.

    Each cell is split along its lower-left to upper-right diagonal.
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    a, b = map(float, domain)
    if not b > a:
        raise InvalidParameterError("domain must satisfy a < b")
    x = np.linspace(a, b, n + 1)
    X, Y = np.meshgrid(x, x)
    V = np.column_stack([X.ravel(), Y.ravel()])
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    T = np.empty((2 * n * n, 3), dtype=np.int64)
    T[0::2] = lower
    T[1::2] = upper
    return Mesh(V, T)


def gen_disk_mesh(rings, radius=1.0):
    """Concentric-ring mesh of the disk of the given radius.

    Ring ``j`` (``1 <= j <= rings``) has ``6 j`` equally spaced vertices at
    radius ``j * radius / rings``; consecutive rings are zipped together sector
    by sector, giving ``6 rings^2`` triangles.
    """
    if int(rings) != rings or rings < 1:
        raise InvalidParameterError(f"rings must be a positive integer, got {rings!r}")
    if not radius > 0:
        raise InvalidParameterError("radius must be positive")
    rings = int(rings)
    verts = [(0.0, 0.0)]
    start = [0]
    for j in range(1, rings + 1):
        start.append(len(verts))
        r = radius * j / rings
        theta = 2.0 * np.pi * np.arange(6 * j) / (6 * j)
        c, s = np.cos(theta), np.sin(theta)
        if j == rings:
            # exact unit vectors keep boundary vertices on the circle
            nrm = np.hypot(c, s)
            c, s = c / nrm, s / nrm
        verts.extend(zip(r * c, r * s))
    tris = []
    for j in range(1, rings + 1):
        outer = lambda k: start[j] + (k % (6 * j))  # noqa: E731
        if j == 1:
            for k in range(6):
                tris.append((0, outer(k), outer(k + 1)))
            continue
        inner = lambda k: start[j - 1] + (k % (6 * (j - 1)))  # noqa: E731
        for s in range(6):
            a, b = 0, 0  # steps taken along outer (j) and inner (j-1) arcs of this sector
            while a < j or b < j - 1:
                # advance whichever next vertex has the smaller angle
                ang_o = (s * j + a + 1) / (6 * j)
                ang_i = (s * (j - 1) + b + 1) / (6 * (j - 1))
                if b >= j - 1 or (a < j and ang_o <= ang_i):
                    tris.append((outer(s * j + a), outer(s * j + a + 1), inner(s * (j - 1) + b)))
                    a += 1
                else:
                    tris.append((inner(s * (j - 1) + b), outer(s * j + a), inner(s * (j - 1) + b + 1)))
                    b += 1
    return Mesh(np.array(verts), np.array(tris, dtype=np.int64))


def save_mesh(mesh):
    """Serialize ``mesh`` to text with 17 significant digits."""
    lines = [f"{mesh.n_vertices} {mesh.n_triangles}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    return "\n".join(lines) + "\n"


def load_mesh(text):
    """Parse the text format; errors carry 1-based line numbers."""
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line.split()))
    if not rows:
        raise MeshParseError("empty mesh")
    lineno, head = rows[0]
    if len(head) != 2:
        raise MeshParseError("header must be 'nv nt'", lineno)
    try:
        nv, nt = int(head[0]), int(head[1])
    except ValueError:
        raise MeshParseError("header counts must be integers", lineno) from None
    if nv < 3 or nt < 1:
        raise MeshParseError(f"invalid counts nv={nv}, nt={nt}", lineno)
    if len(rows) - 1 < nv + nt:
        raise MeshParseError(
            f"expected {nv} vertex and {nt} triangle lines, found {len(rows) - 1} data lines", lineno)
    if len(rows) - 1 > nv + nt:
        raise MeshParseError("trailing data after triangles", rows[nv + nt + 1][0])
    V = np.empty((nv, 2))
    for i, (ln, tok) in enumerate(rows[1:nv + 1]):
        if len(tok) != 2:
            raise MeshParseError("vertex line must have two coordinates", ln)
        try:
            V[i] = float(tok[0]), float(tok[1])
        except ValueError:
            raise MeshParseError("bad vertex coordinate", ln) from None
    T = np.empty((nt, 3), dtype=np.int64)
    for i, (ln, tok) in enumerate(rows[nv + 1:]):
        if len(tok) != 3:
            raise MeshParseError("triangle line must have three indices", ln)
        try:
            T[i] = [int(t) for t in tok]
        except ValueError:
            raise MeshParseError("bad vertex index", ln) from None
        if T[i].min() < 0 or T[i].max() >= nv:
            raise MeshParseError(f"vertex index out of range 0..{nv - 1}", ln)
        if _triangle_area(V[T[i]]) <= 0:
            raise MeshParseError("triangle is inverted or degenerate", ln)
    return Mesh(V, T)
