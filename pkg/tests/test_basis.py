import numpy as np
import pytest

from ifemeig import (InvalidMeshError, InvalidParameterError, LevelSetInterface, build_bases,
                     decompose, gen_disk_mesh, gen_square_mesh, immersed_basis, interpolate,
                     standard_cr_basis)
from ifemeig.assembly import QUAD_DEG2, element_matrices
from ifemeig.geometry import _triangle_area

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
REF_CUT = LevelSetInterface.affine((1 / 0.35, 1 / 0.65), 1.0, beta_minus=1.0, beta_plus=1000.0)
_GX, _GW = np.polynomial.legendre.leggauss(12)
_GX, _GW = 0.5 * (_GX + 1.0), 0.5 * _GW


def _edge_average(f, a, b, cuts=()):
    """Average of f over segment a-b, split at the parameters in ``cuts``."""
    ts = np.concatenate([[0.0], np.sort(cuts), [1.0]])
    a, b = np.asarray(a, float), np.asarray(b, float)
    total = 0.0
    for t0, t1 in zip(ts[:-1], ts[1:]):
        t = t0 + (t1 - t0) * _GX
        p = a + t[:, None] * (b - a)
        total += (t1 - t0) * np.dot(_GW, f(p[:, 0], p[:, 1]))
    return total


def _param_on_edge(a, b, p):
    d = np.asarray(b) - np.asarray(a)
    return float(np.dot(np.asarray(p) - a, d) / np.dot(d, d))


def constraint_residuals(local, bm, bp):
    """Largest violation of the edge-average, continuity and flux conditions,
    evaluated independently of the construction."""
    d = local.decomposition
    P = d.triangle
    res = 0.0
    for i in range(3):
        phi = lambda x, y, i=i: local(i, x, y)  # noqa: E731
        for j in range(3):
            a, b = P[(j + 1) % 3], P[(j + 2) % 3]
            cuts = [_param_on_edge(a, b, q) for q in (d.D, d.E)
                    if q is not None and abs(np.cross(np.append(b - a, 0), np.append(q - a, 0))[2]) < 1e-12]
            cuts = [t for t in cuts if 0 < t < 1]
            res = max(res, abs(_edge_average(phi, a, b, cuts) - (i == j)))
        if d.is_interface:
            for q in (d.D, d.E):
                res = max(res, abs(local.value(i, *q, -1) - local.value(i, *q, 1)))
            t = d.E - d.D
            n = np.array([-t[1], t[0]]) / np.hypot(*t)
            fm = bm * local.gradient(i, -1) @ n
            fp = bp * local.gradient(i, 1) @ n
            res = max(res, abs(fm - fp) / max(bp, bm) / max(1.0, np.abs(local.gradient(i, 1)).max()))
    return res


def test_cr_reference_example():
    b = standard_cr_basis(REF)
    # local function 2 sits on edge AB (opposite C)
    x, y = np.array([0.2, 0.7, 0.1]), np.array([0.3, 0.1, 0.05])
    assert np.allclose(b(2, x, y), 1 - 2 * y, atol=1e-15)
    assert np.allclose(b.gradient(2, 1), (0.0, -2.0), atol=1e-15)
    assert constraint_residuals(type(b)(b.coef, decompose(REF, LevelSetInterface.circle(5.0))), 1, 1) < 1e-14


def test_cr_partition_of_unity(rng):
    P = rng.random((3, 2))
    if _triangle_area(P) < 0:
        P = P[::-1]
    b = standard_cr_basis(P)
    x, y = rng.random(10), rng.random(10)
    assert np.allclose(sum(b(i, x, y) for i in range(3)), 1.0, atol=1e-12)


def test_degenerate_rejected():
    with pytest.raises(InvalidMeshError):
        standard_cr_basis([(0, 0), (1, 1), (2, 2)])


def test_reference_cut_constraints_by_quadrature():
    d = decompose(REF, REF_CUT)
    local = immersed_basis(d, 1.0, 1000.0)
    assert constraint_residuals(local, 1.0, 1000.0) <= 1e-10
    # the two pieces really differ
    assert np.abs(local.coef[0] - local.coef[1]).max() > 1e-3


@pytest.mark.parametrize("bm, bp", [(1.0, 1000.0), (1000.0, 1.0), (3.0, 0.2)])
def test_partition_of_unity_immersed(bm, bp, rng):
    d = decompose(REF, REF_CUT.with_beta(bm, bp))
    local = immersed_basis(d, bm, bp)
    for q in (d.D, d.E):
        for s in (-1, 1):
            assert abs(sum(local.value(i, *q, s) for i in range(3)) - 1) < 1e-12
    for region, s in ((d.region_minus, -1), (d.region_plus, 1)):
        for t in region:
            w = rng.dirichlet(np.ones(3), 10)
            p = w @ np.asarray(t)
            assert np.allclose(sum(local.value(i, p[:, 0], p[:, 1], s) for i in range(3)), 1, atol=1e-12)


def test_equal_beta_reduces_to_cr():
    for mesh in (gen_disk_mesh(9), gen_square_mesh(10)):
        iface = LevelSetInterface.circle(0.38, center=(0.02, 0.01), beta_minus=2.5, beta_plus=2.5)
        bases = build_bases(mesh, iface)
        assert bases.interface_elements.size > 0
        for k in bases.interface_elements:
            cr = standard_cr_basis(mesh.vertices[mesh.triangles[k]]).coef
            assert np.abs(bases.coef[k] - cr).max() <= 1e-12 * max(1.0, np.abs(cr).max())


def test_immersed_basis_rejects_bad_beta():
    with pytest.raises(InvalidParameterError):
        immersed_basis(decompose(REF, REF_CUT), 0.0, 1.0)


@pytest.mark.parametrize("bm, bp", [(1.0, 1000.0), (1000.0, 1.0)])
def test_constraints_on_mesh_elements(bm, bp):
    mesh = gen_disk_mesh(7)
    bases = build_bases(mesh, LevelSetInterface.circle(0.38, beta_minus=bm, beta_plus=bp))
    worst = max(constraint_residuals(bases.local(k), bm, bp) for k in bases.interface_elements)
    assert worst <= 1e-10


def test_interpolation_examples():
    mesh = gen_square_mesh(8)
    bases = build_bases(mesh, LevelSetInterface.circle(0.38))
    assert np.allclose(interpolate(bases, lambda x, y: 1.0 + 0 * x), 1.0, atol=1e-15)
    # single-triangle mesh with edge (0,0)-(1,0)
    from ifemeig import Mesh
    tri = build_bases(Mesh(REF, [[0, 1, 2]]), LevelSetInterface.circle(0.1, center=(5, 5)))
    e = int(np.flatnonzero((tri.mesh.edges == [0, 1]).all(axis=1))[0])
    assert abs(interpolate(tri, lambda x, y: x)[e] - 0.5) < 1e-15


@pytest.mark.parametrize("bm, bp", [(1.0, 1000.0), (7.0, 0.5)])
def test_interpolation_local_exactness(bm, bp, rng):
    """A piecewise affine function with continuous value and flux across a
    straight interface lies in every local space and is reproduced."""
    x0 = 0.137
    iface = LevelSetInterface.affine((1.0, 0.0), x0, beta_minus=bm, beta_plus=bp)
    c = 0.3

    def v(x, y):
        return np.where(x < x0, (x - x0) / bm, (x - x0) / bp) + c + 0.7 * y

    mesh = gen_square_mesh(9)
    bases = build_bases(mesh, iface)
    u = interpolate(bases, v)
    pts = rng.uniform(-0.99, 0.99, (400, 2))
    pts = pts[np.abs(pts[:, 0] - x0) > 1e-9]
    assert np.abs(bases.evaluate_points(u, pts) - v(pts[:, 0], pts[:, 1])).max() <= 1e-12


def test_stiffness_two_ways():
    mesh = gen_disk_mesh(8)
    iface = LevelSetInterface.circle(0.38, beta_minus=1.0, beta_plus=1000.0)
    bases = build_bases(mesh, iface)
    K, _ = element_matrices(bases)
    # degree-2 quadrature of beta * grad . grad per sub-triangle
    cut = bases.cut
    bary, w = QUAD_DEG2
    K2 = np.zeros_like(K)
    for s in range(len(cut.sub_elem)):
        k, side = cut.sub_elem[s], cut.sub_side[s]
        xy = cut.sub_xy[s]
        area = abs(_triangle_area(xy))
        loc = bases.local(k)
        for q, wq in zip(bary @ xy, w):
            eps = 1e-7
            g = []
            for i in range(3):
                gx = (loc.value(i, q[0] + eps, q[1], side) - loc.value(i, q[0] - eps, q[1], side)) / (2 * eps)
                gy = (loc.value(i, q[0], q[1] + eps, side) - loc.value(i, q[0], q[1] - eps, side)) / (2 * eps)
                g.append((gx, gy))
            g = np.array(g)
            K2[k] += iface.beta(side) * area * wq * g @ g.T
    scale = np.abs(K).max(axis=(1, 2))[:, None, None]
    # finite differences of affine pieces carry only rounding error
    assert np.abs(K - K2).max() / scale.max() < 1e-6
    # exact per-piece gradients make both formulas coincide
    K3 = np.zeros_like(K)
    for s in range(len(cut.sub_elem)):
        k, side = cut.sub_elem[s], cut.sub_side[s]
        G = np.array([bases.local(k).gradient(i, side) for i in range(3)])
        area = abs(_triangle_area(cut.sub_xy[s]))
        K3[k] += iface.beta(side) * sum(wq * area * G @ G.T for wq in w)
    assert np.abs(K - K3).max() <= 1e-13 * np.abs(K).max()
