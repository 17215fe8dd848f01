"""Level-set interfaces and the chord-based cut of triangles.

Every triangle is classified by the signs of the level set at its vertices.
A triangle whose vertices do not all lie on the same side is an interface
element: the interface is replaced by the chord ``DE`` joining the two edge
crossings, which splits the triangle into the sub-triangle at the lone vertex
and a quadrilateral (itself split into two triangles).

Sides are encoded as ``-1`` (``phi < 0``) and ``+1`` (``phi >= 0``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import warnings

import numpy as np

from .exceptions import InvalidMeshError, InvalidParameterError, MeshTooCoarseError

MINUS = -1
PLUS = 1
INTERFACE = 0

SNAP_TOL = 1e-9
AREA_TOL = 1e-12
BISECTION_ITERS = 60
EDGE_SAMPLES = 8

_KINDS = ("circle", "star", "affine")


@dataclass(frozen=True)
class LevelSetInterface:
    """Interface given as the zero set of a scalar field ``phi``.

    ``params`` depends on ``kind``:

    * ``circle``: ``(cx, cy, radius)``
    * ``star``: ``(r0, amp, lobes, phase)``, ``r = r0 + amp*sin(lobes*theta - phase)``
    * ``affine``: ``(nx, ny, offset)``, ``phi = nx*x + ny*y - offset``
    """

    kind: str
    params: tuple
    beta_minus: float = 1.0
    beta_plus: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"unknown interface kind {self.kind!r}")
        if not (self.beta_minus > 0 and self.beta_plus > 0):
            raise InvalidParameterError("beta_minus and beta_plus must be positive")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        expected = {"circle": 3, "star": 4, "affine": 3}[self.kind]
        if len(self.params) != expected:
            raise InvalidParameterError(
                f"{self.kind} interface takes {expected} parameters, got {len(self.params)}")
        if self.kind == "circle" and self.params[2] <= 0:
            raise InvalidParameterError("circle radius must be positive")
        if self.kind == "affine" and self.params[0] == 0 and self.params[1] == 0:
            raise InvalidParameterError("affine normal must be nonzero")

    @classmethod
    def circle(cls, radius, center=(0.0, 0.0), beta_minus=1.0, beta_plus=1.0):
        return cls("circle", (center[0], center[1], radius), beta_minus, beta_plus)

    @classmethod
    def star(cls, r0=0.5, amp=0.2, lobes=5, phase=np.pi / 5, beta_minus=1.0, beta_plus=1.0):
        return cls("star", (r0, amp, lobes, phase), beta_minus, beta_plus)

    @classmethod
    def affine(cls, normal, offset, beta_minus=1.0, beta_plus=1.0):
        return cls("affine", (normal[0], normal[1], offset), beta_minus, beta_plus)

    def with_beta(self, beta_minus, beta_plus):
        return LevelSetInterface(self.kind, self.params, beta_minus, beta_plus)

    def phi(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = self.params
        if self.kind == "circle":
            return np.hypot(x - p[0], y - p[1]) - p[2]
        if self.kind == "star":
            r0, amp, lobes, phase = p
            theta = np.arctan2(y, x)
            return np.hypot(x, y) - (r0 + amp * np.sin(lobes * theta - phase))
        return p[0] * x + p[1] * y - p[2]

    def side(self, x, y):
        """``-1`` where ``phi < 0``, ``+1`` elsewhere."""
        return np.where(self.phi(x, y) < 0, MINUS, PLUS).astype(np.int8)

    def beta(self, side):
        """Coefficient for an array of sides."""
        return np.where(np.asarray(side) < 0, self.beta_minus, self.beta_plus)


def _triangle_area(P):
    """Signed areas of triangles ``P[..., 3, 2]``."""
    a = P[..., 1, :] - P[..., 0, :]
    b = P[..., 2, :] - P[..., 0, :]
    return 0.5 * (a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0])


def _check_nondegenerate(P):
    area = _triangle_area(P)
    scale = np.max(np.sum((P - P[..., :1, :]) ** 2, axis=-1), axis=-1)
    bad = ~(np.abs(area) > 1e-14 * scale)
    if np.any(bad):
        idx = np.flatnonzero(bad)
        raise InvalidMeshError(f"degenerate triangle(s) at index {idx[:5].tolist()}")
    return area


def edge_crossings(iface, p0, p1, on_multiple="raise"):
    """Crossing parameters ``t`` of segments ``p0 -> p1`` with the interface.

    Returns an array of ``t`` in ``[0, 1]``, NaN where the endpoint sides agree.
    Crossings closer than ``SNAP_TOL`` (relative) to an endpoint are snapped
    onto it. If sub-sampling finds more than one sign change on a segment,
    ``on_multiple`` decides: ``"raise"`` raises :class:`MeshTooCoarseError`,
    ``"warn"`` and ``"ignore"`` fall back to the endpoint signs (an even number
    of crossings is then invisible, an odd number yields one crossing).
    """
    if on_multiple not in ("raise", "warn", "ignore"):
        raise InvalidParameterError(f"on_multiple must be raise, warn or ignore, got {on_multiple!r}")
    p0 = np.atleast_2d(np.asarray(p0, dtype=float))
    p1 = np.atleast_2d(np.asarray(p1, dtype=float))
    d = p1 - p0
    length = np.hypot(d[:, 0], d[:, 1])

    ts = np.linspace(0.0, 1.0, EDGE_SAMPLES + 2)
    pts = p0[:, None, :] + ts[None, :, None] * d[:, None, :]
    # exact endpoints: p0 + 1 * (p1 - p0) can round away from p1 and flip its sign
    pts[:, 0], pts[:, -1] = p0, p1
    vals = iface.phi(pts[..., 0], pts[..., 1])
    signs = np.where(vals < 0, -1, 1)
    # near-zero samples carry no sign information
    signs = np.where(np.abs(vals) <= 1e-12 * length[:, None], 0, signs)
    changes = np.zeros(len(p0), dtype=int)
    last = np.zeros(len(p0), dtype=int)
    for k in range(ts.size):
        s = signs[:, k]
        changes += (s != 0) & (last != 0) & (s != last)
        last = np.where(s != 0, s, last)
    if np.any(changes > 1) and on_multiple != "ignore":
        bad = np.flatnonzero(changes > 1)
        msg = (f"interface crosses {bad.size} edge(s) more than once; first between "
               f"{p0[bad[0]].tolist()} and {p1[bad[0]].tolist()}")
        if on_multiple == "raise":
            raise MeshTooCoarseError(msg)
        warnings.warn(msg + "; using endpoint signs", RuntimeWarning, stacklevel=2)

    s0 = np.where(vals[:, 0] < 0, -1, 1)
    s1 = np.where(vals[:, -1] < 0, -1, 1)
    t = np.full(len(p0), np.nan)
    cut = np.flatnonzero(s0 != s1)
    if cut.size:
        lo = np.zeros(cut.size)
        hi = np.ones(cut.size)
        a, dd, sa = p0[cut], d[cut], s0[cut]
        for _ in range(BISECTION_ITERS):
            mid = 0.5 * (lo + hi)
            q = a + mid[:, None] * dd
            sm = np.where(iface.phi(q[:, 0], q[:, 1]) < 0, -1, 1)
            same = sm == sa
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        tc = 0.5 * (lo + hi)
        tc = np.where(tc < SNAP_TOL, 0.0, tc)
        tc = np.where(tc > 1.0 - SNAP_TOL, 1.0, tc)
        t[cut] = tc
    return t


def edge_intersection(p0, p1, iface):
    """Point where the segment ``p0 -> p1`` crosses the interface, or ``None``."""
    t = edge_crossings(iface, [p0], [p1])[0]
    if np.isnan(t):
        return None
    return (1.0 - t) * np.asarray(p0, dtype=float) + t * np.asarray(p1, dtype=float)


@dataclass
class _CutTriangles:
    """Batch result of cutting triangles; see :func:`_cut_triangles`."""

    elem_class: np.ndarray      # (m,) -1, +1 or 0 (interface)
    lone: np.ndarray            # (m,) local index of the lone vertex, -1 if none
    D: np.ndarray               # (m, 2) crossing on edge lone -> lone+1
    E: np.ndarray               # (m, 2) crossing on edge lone -> lone+2
    lone_side: np.ndarray       # (m,)
    sub_xy: np.ndarray          # (s, 3, 2)
    sub_tri: np.ndarray         # (s,) owning triangle
    sub_side: np.ndarray        # (s,)


def _cut_triangles(P, vside, tloc):
    """Classify and split triangles given vertex sides and edge crossings.

    ``P`` is (m, 3, 2) counter-clockwise, ``vside`` (m, 3) and ``tloc`` (m, 3)
    holds the crossing parameter on local edge ``j`` measured from vertex
    ``j+1`` to vertex ``j+2`` (NaN if uncut).
    """
    m = len(P)
    area = np.abs(_triangle_area(P))
    nminus = np.sum(vside < 0, axis=1)
    mixed = (nminus == 1) | (nminus == 2)
    elem_class = np.where(nminus == 3, MINUS, PLUS).astype(np.int8)
    lone = np.full(m, -1, dtype=int)
    D = np.full((m, 2), np.nan)
    E = np.full((m, 2), np.nan)
    lone_side = np.zeros(m, dtype=np.int8)

    idx = np.flatnonzero(mixed)
    if idx.size:
        vs = vside[idx]
        minority = np.where(nminus[idx] == 1, -1, 1)
        a = np.argmax(vs == minority[:, None], axis=1)
        b = (a + 1) % 3
        c = (a + 2) % 3
        Pa, Pb, Pc = P[idx, a], P[idx, b], P[idx, c]
        tD = _param_from(tloc[idx, c], start_is_first=((c + 1) % 3 == a))
        tE = _param_from(tloc[idx, b], start_is_first=((b + 1) % 3 == a))
        # convex form: a snapped t of 0 or 1 lands exactly on the vertex
        Di = (1.0 - tD[:, None]) * Pa + tD[:, None] * Pb
        Ei = (1.0 - tE[:, None]) * Pa + tE[:, None] * Pc
        ratio = tD * tE
        side_a = minority
        side_other = -minority
        tiny_lone = ratio < AREA_TOL
        tiny_quad = (1.0 - ratio) < AREA_TOL
        cls = np.zeros(idx.size, dtype=np.int8)
        cls = np.where(tiny_lone, side_other, cls)
        cls = np.where(tiny_quad, side_a, cls)
        elem_class[idx] = cls
        keep = cls == INTERFACE
        sel = idx[keep]
        lone[sel] = a[keep]
        D[sel] = Di[keep]
        E[sel] = Ei[keep]
        lone_side[sel] = side_a[keep]

    # sub-triangulation
    whole = np.flatnonzero(elem_class != INTERFACE)
    cut = np.flatnonzero(elem_class == INTERFACE)
    a = lone[cut]
    Pa = P[cut, a]
    Pb = P[cut, (a + 1) % 3]
    Pc = P[cut, (a + 2) % 3]
    Dc, Ec = D[cut], E[cut]
    t_lone = np.stack([Pa, Dc, Ec], axis=1)
    t_q1 = np.stack([Dc, Pb, Pc], axis=1)
    t_q2 = np.stack([Dc, Pc, Ec], axis=1)
    sub_xy = np.concatenate([P[whole], t_lone, t_q1, t_q2])
    sub_tri = np.concatenate([whole, cut, cut, cut])
    ls = lone_side[cut]
    sub_side = np.concatenate([elem_class[whole], ls, -ls, -ls]).astype(np.int8)
    sub_area = np.abs(_triangle_area(sub_xy))
    nonzero = sub_area > 1e-14 * area[sub_tri]
    order = np.argsort(sub_tri[nonzero], kind="stable")
    return _CutTriangles(
        elem_class=elem_class, lone=lone, D=D, E=E, lone_side=lone_side,
        sub_xy=sub_xy[nonzero][order], sub_tri=sub_tri[nonzero][order],
        sub_side=sub_side[nonzero][order])


def _param_from(t, start_is_first):
    """Convert an edge parameter to one measured from the lone vertex."""
    return np.where(start_is_first, t, 1.0 - t)


def _local_edge_params(P, iface):
    """Crossing parameters for the three local edges of each triangle."""
    m = len(P)
    p0 = np.concatenate([P[:, (j + 1) % 3] for j in range(3)])
    p1 = np.concatenate([P[:, (j + 2) % 3] for j in range(3)])
    t = edge_crossings(iface, p0, p1)
    return t.reshape(3, m).T


@dataclass
class ElementDecomposition:
    """Cut record of a single triangle.

    ``element_class`` is ``"interface"``, ``"minus"`` or ``"plus"``.
    ``cut_edges`` holds the local indices of the edges containing ``D`` and ``E``
    (local edge ``j`` is opposite vertex ``j``).
    """

    triangle: np.ndarray
    element_class: str
    D: np.ndarray | None = None
    E: np.ndarray | None = None
    lone: int | None = None
    lone_side: int | None = None
    cut_edges: tuple | None = None
    region_minus: list = field(default_factory=list)
    region_plus: list = field(default_factory=list)
    area_minus: float = 0.0
    area_plus: float = 0.0

    @property
    def is_interface(self):
        return self.element_class == "interface"

    @property
    def side(self):
        return {"minus": MINUS, "plus": PLUS}.get(self.element_class)


_CLASS_NAMES = {MINUS: "minus", PLUS: "plus", INTERFACE: "interface"}


def _as_triangle(triangle):
    P = np.asarray(triangle, dtype=float).reshape(3, 2)
    area = _check_nondegenerate(P[None])[0]
    if area < 0:
        P = P[[0, 2, 1]]
    return P


def classify_element(triangle, iface):
    """``"interface"``, ``"minus"`` or ``"plus"`` for one triangle."""
    return decompose(triangle, iface).element_class


def decompose(triangle, iface):
    """Split one triangle along the interface chord.

    Vertices are reordered counter-clockwise if necessary.
    """
    P = _as_triangle(triangle)
    vside = iface.side(P[:, 0], P[:, 1])[None]
    tloc = _local_edge_params(P[None], iface)
    cut = _cut_triangles(P[None], vside, tloc)
    cls = int(cut.elem_class[0])
    out = ElementDecomposition(triangle=P, element_class=_CLASS_NAMES[cls])
    for xy, s in zip(cut.sub_xy, cut.sub_side):
        (out.region_minus if s < 0 else out.region_plus).append(xy)
    out.area_minus = float(sum(abs(_triangle_area(t)) for t in out.region_minus))
    out.area_plus = float(sum(abs(_triangle_area(t)) for t in out.region_plus))
    if cls == INTERFACE:
        a = int(cut.lone[0])
        out.lone = a
        out.lone_side = int(cut.lone_side[0])
        out.D = cut.D[0]
        out.E = cut.E[0]
        out.cut_edges = ((a + 2) % 3, (a + 1) % 3)
    return out


@dataclass
class MeshCut:
    """Interface cut of a whole mesh.

    Crossings are computed once per global edge so that neighbouring
    triangles see the same intersection points.
    """

    vertex_side: np.ndarray     # (nv,)
    edge_t: np.ndarray          # (ne,) from edges[:, 0] to edges[:, 1], NaN if uncut
    edge_point: np.ndarray      # (ne, 2)
    elem_class: np.ndarray      # (nt,)
    lone: np.ndarray            # (nt,) -1 for non-interface elements
    lone_side: np.ndarray       # (nt,)
    D: np.ndarray               # (nt, 2), NaN for non-interface elements
    E: np.ndarray
    sub_xy: np.ndarray          # (ns, 3, 2) sub-triangles, grouped by element
    sub_elem: np.ndarray        # (ns,)
    sub_side: np.ndarray        # (ns,)

    @property
    def interface_elements(self):
        return np.flatnonzero(self.elem_class == INTERFACE)

    def decomposition(self, mesh, k):
        """:class:`ElementDecomposition` view of element ``k``."""
        P = mesh.vertices[mesh.triangles[k]]
        cls = int(self.elem_class[k])
        out = ElementDecomposition(triangle=P, element_class=_CLASS_NAMES[cls])
        sel = np.flatnonzero(self.sub_elem == k)
        for s in sel:
            (out.region_minus if self.sub_side[s] < 0 else out.region_plus).append(self.sub_xy[s])
        out.area_minus = float(sum(abs(_triangle_area(t)) for t in out.region_minus))
        out.area_plus = float(sum(abs(_triangle_area(t)) for t in out.region_plus))
        if cls == INTERFACE:
            a = int(self.lone[k])
            out.lone, out.lone_side = a, int(self.lone_side[k])
            out.D, out.E = self.D[k], self.E[k]
            out.cut_edges = ((a + 2) % 3, (a + 1) % 3)
        return out


def cut_mesh(mesh, iface, on_multiple="raise"):
    """Classify every triangle of ``mesh`` and build its sub-triangulation.

    ``on_multiple`` is passed to :func:`edge_crossings`.
    """
    V = mesh.vertices
    vside = iface.side(V[:, 0], V[:, 1])
    p0 = V[mesh.edges[:, 0]]
    p1 = V[mesh.edges[:, 1]]
    edge_t = edge_crossings(iface, p0, p1, on_multiple)
    edge_point = (1.0 - edge_t[:, None]) * p0 + edge_t[:, None] * p1

    T = mesh.triangles
    P = V[T]
    tloc = np.empty((len(T), 3))
    for j in range(3):
        e = mesh.tri_edges[:, j]
        first = mesh.edges[e, 0] == T[:, (j + 1) % 3]
        tloc[:, j] = np.where(first, edge_t[e], 1.0 - edge_t[e])
    res = _cut_triangles(P, vside[T], tloc)
    # reuse the exact shared edge points for D and E
    cut = np.flatnonzero(res.elem_class == INTERFACE)
    a = res.lone[cut]
    eD = mesh.tri_edges[cut, (a + 2) % 3]
    eE = mesh.tri_edges[cut, (a + 1) % 3]
    assert np.allclose(res.D[cut], edge_point[eD], rtol=0, atol=1e-13 * max(1.0, np.abs(V).max()))
    assert np.allclose(res.E[cut], edge_point[eE], rtol=0, atol=1e-13 * max(1.0, np.abs(V).max()))
    return MeshCut(
        vertex_side=vside, edge_t=edge_t, edge_point=edge_point,
        elem_class=res.elem_class, lone=res.lone, lone_side=res.lone_side,
        D=res.D, E=res.E, sub_xy=res.sub_xy, sub_elem=res.sub_tri, sub_side=res.sub_side)

