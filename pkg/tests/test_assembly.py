import numpy as np
import pytest
import scipy.linalg as la

from ifemeig import (DofMap, InvalidParameterError, LevelSetInterface, Mesh, assemble_load,
                     assemble_mass, assemble_penalty, assemble_stiffness, assemble_system,
                     broken_norms, build_bases, gen_disk_mesh, gen_square_mesh, interpolate)
from ifemeig.assembly import element_matrices
from ifemeig.geometry import _triangle_area

REF = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
FAR = LevelSetInterface.circle(0.1, center=(50.0, 50.0))
SOFT = LevelSetInterface.circle(0.38, beta_minus=1.0, beta_plus=1000.0)


def _max_abs(A):
    return abs(A).max() if A.nnz else 0.0


def test_reference_stiffness_diagonal():
    bases = build_bases(Mesh(REF, [[0, 1, 2]]), FAR)
    K, M = element_matrices(bases)
    # local function 2 is 1 - 2y
    assert abs(K[0, 2, 2] - 2.0) < 1e-14
    # int (1 - 2y)^2 over the reference triangle, by hand: 1 - 5/2 + 8/3 - 1
    assert abs(M[0, 2, 2] - 1.0 / 6.0) < 1e-15


@pytest.fixture(scope="module")
def disk_bases():
    return build_bases(gen_disk_mesh(10), SOFT)


def test_exact_symmetry(disk_bases):
    for A in (assemble_stiffness(disk_bases), assemble_mass(disk_bases),
              assemble_penalty(disk_bases, 3.0)):
        assert _max_abs(A - A.T) == 0.0


def test_patch_test_constant():
    mesh = gen_square_mesh(8)
    bases = build_bases(mesh, LevelSetInterface.circle(0.38, beta_minus=1.0, beta_plus=1000.0))
    dofmap = DofMap(mesh)
    A = dofmap.restrict(assemble_stiffness(bases))
    r = A @ np.ones(dofmap.n_dofs)
    bnd = np.zeros(mesh.n_edges, dtype=bool)
    bnd[mesh.boundary_edges] = True
    touches = bnd[mesh.tri_edges].any(axis=1)            # triangles with a boundary edge
    away = ~touches[mesh.edge_tris[dofmap.dof_to_edge]].any(axis=1)
    assert away.sum() > 50
    assert np.abs(r[away]).max() <= 1e-12 * abs(A).max()


def test_penalty_zero_on_conforming_input():
    mesh = gen_disk_mesh(9)
    iface = LevelSetInterface.circle(0.38, beta_minus=4.0, beta_plus=4.0)
    bases = build_bases(mesh, iface)
    # continuous piecewise-affine hat function of an interior vertex
    v = 17
    hat_vals = np.zeros(mesh.n_vertices)
    hat_vals[v] = 1.0
    edge_dofs = 0.5 * hat_vals[mesh.edges].sum(axis=1)
    J = assemble_penalty(bases, 1.0)
    assert abs(edge_dofs @ (J @ edge_dofs)) <= 1e-12
    # any vertex function works, also across the interface
    rng = np.random.default_rng(3)
    w = rng.standard_normal(mesh.n_vertices)
    u = 0.5 * w[mesh.edges].sum(axis=1)
    assert abs(u @ (J @ u)) <= 1e-12 * (u @ u)


def _midpoint(f, a, b, n):
    t = (np.arange(n) + 0.5) / n
    p = a + t[:, None] * (b - a)
    return np.linalg.norm(b - a) * np.mean(f(p[:, 0], p[:, 1]))


def test_two_element_jump_against_dense_quadrature():
    V = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    mesh = Mesh(V, [[0, 1, 2], [0, 2, 3]])
    bases = build_bases(mesh, FAR)
    shared = int(mesh.interior_edges[0])
    u = np.zeros(mesh.n_edges)
    u[[e for e in range(mesh.n_edges) if e != shared]] = [0.3, -1.2, 0.7, 2.0]
    kappa = 2.5
    J = assemble_penalty(bases, kappa)
    a, b = V[mesh.edges[shared]]

    def jump2(x, y):
        t0, t1 = mesh.edge_tris[shared]
        l0, l1 = bases.local(t0), bases.local(t1)
        u0 = sum(u[mesh.tri_edges[t0, i]] * l0.value(i, x, y, 1) for i in range(3))
        u1 = sum(u[mesh.tri_edges[t1, i]] * l1.value(i, x, y, 1) for i in range(3))
        return (u0 - u1) ** 2

    h = np.linalg.norm(b - a)
    m50, m100 = _midpoint(jump2, a, b, 50), _midpoint(jump2, a, b, 100)
    # one Richardson step makes the composite midpoint rule exact for quadratics
    oracle = kappa * 1.0 / h * (4 * m100 - m50) / 3
    assert abs(kappa / h * m50 - oracle) < 1e-3 * oracle   # plain rule is already close
    assert abs(u @ (J @ u) - oracle) <= 1e-12 * max(1.0, oracle)


def test_penalty_linear_in_kappa(disk_bases):
    J1 = assemble_penalty(disk_bases, 1.0)
    J2 = assemble_penalty(disk_bases, 2.0)
    assert _max_abs(J2 - 2.0 * J1) == 0.0
    with pytest.raises(InvalidParameterError):
        assemble_penalty(disk_bases, 0.0)


def test_total_mass_is_polygon_area():
    for mesh, iface in ((gen_disk_mesh(12), SOFT), (gen_square_mesh(8), SOFT)):
        bases = build_bases(mesh, iface)
        M = assemble_mass(bases)
        one = np.ones(mesh.n_edges)
        assert abs(one @ (M @ one) - mesh.areas.sum()) <= 1e-10
    # the 12-ring polygon area, by formula
    n = 72
    assert abs(gen_disk_mesh(12).areas.sum() - 0.5 * n * np.sin(2 * np.pi / n)) < 1e-13


def test_mass_positive_definite():
    mesh = gen_square_mesh(4)
    bases = build_bases(mesh, LevelSetInterface.circle(0.38), on_multiple="ignore")
    M = assemble_mass(bases).toarray()
    assert la.eigvalsh(M)[0] > 0
    A, Mi, _ = assemble_system(build_bases(gen_disk_mesh(8), SOFT), 1.0)
    assert la.eigvalsh(A.toarray())[0] > 0
    assert la.eigvalsh(Mi.toarray())[0] > 0


def test_load_examples(disk_bases):
    mesh = disk_bases.mesh
    assert np.all(assemble_load(disk_bases, lambda x, y: 0.0 * x) == 0.0)
    b = assemble_load(disk_bases, lambda x, y: 1.0 + 0 * x)
    M = assemble_mass(disk_bases)
    dm = DofMap(mesh)
    assert np.allclose(dm.restrict(b), dm.restrict(M @ np.ones(mesh.n_edges)), atol=1e-14)


def test_broken_norm_examples():
    mesh = gen_square_mesh(4, (0.0, 1.0))
    bases = build_bases(mesh, LevelSetInterface.circle(0.3, center=(0.5, 0.5), beta_minus=2.0, beta_plus=2.0))
    err = broken_norms(bases, np.zeros(mesh.n_edges), lambda x, y: 1.0 + 0 * x,
                       lambda x, y: (0 * x, 0 * y))
    assert abs(err.l2 - 1.0) < 1e-13
    f = lambda x, y: 0.3 + 2 * x - y  # noqa: E731
    u = interpolate(bases, f)
    err = broken_norms(bases, u, f, lambda x, y: (2 + 0 * x, -1 + 0 * y))
    assert err.l2 <= 1e-12 and err.norm_1j <= 1e-12


def _dense_local(bases, k, n=10):
    """Local matrices of element k by a collapsed Gauss rule on each
    sub-triangle, with the piece picked by the point's chord side."""
    loc = bases.local(k)
    d = loc.decomposition
    g, w = np.polynomial.legendre.leggauss(n)
    g, w = 0.5 * (g + 1), 0.5 * w
    s, t = np.meshgrid(g, g, indexing="ij")
    ws = np.outer(w, w) * s                               # Duffy map Jacobian
    bary = np.stack([1 - s, s * (1 - t), s * t], axis=-1).reshape(-1, 3)
    ws = ws.ravel()
    K = np.zeros((3, 3))
    M = np.zeros((3, 3))
    for region, side in ((d.region_minus, -1), (d.region_plus, 1)):
        for tri in region:
            tri = np.asarray(tri)
            area = abs(_triangle_area(tri))
            p = bary @ tri                                # Gauss points are interior
            sides = loc.side_of(p[:, 0], p[:, 1])
            assert np.all(sides == side)
            vals = np.array([loc(i, p[:, 0], p[:, 1]) for i in range(3)])
            grads = np.array([loc.gradient(i, side) for i in range(3)])
            beta = bases.iface.beta(side)
            M += 2 * area * (vals * ws) @ vals.T
            K += beta * area * grads @ grads.T
    return K, M


def test_local_matrices_against_dense_quadrature(disk_bases, rng):
    K, M = element_matrices(disk_bases)
    ie = disk_bases.interface_elements
    pick = np.concatenate([rng.choice(ie, 14, replace=False),
                           rng.choice(disk_bases.n_elements, 6, replace=False)])
    for k in pick:
        Kd, Md = _dense_local(disk_bases, k)
        assert np.abs(K[k] - Kd).max() <= 1e-12 * np.abs(Kd).max()
        assert np.abs(M[k] - Md).max() <= 1e-12 * np.abs(Md).max() + 1e-18


def test_beta_scaling():
    mesh = gen_disk_mesh(8)
    c = 7.5
    A1, M1, _ = assemble_system(build_bases(mesh, SOFT), 1.0)
    A2, M2, _ = assemble_system(build_bases(mesh, SOFT.with_beta(c * 1.0, c * 1000.0)), 1.0)
    assert _max_abs(A2 - c * A1) <= 1e-12 * _max_abs(A2)
    assert _max_abs(M2 - M1) <= 1e-15
