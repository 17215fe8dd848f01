import numpy as np
import pytest

from ifemeig import (InvalidMeshError, InvalidParameterError, Mesh, MeshParseError,
                     gen_disk_mesh, gen_square_mesh, load_mesh, save_mesh)


def _counts(m):
    return m.n_vertices, m.n_triangles, m.n_edges


@pytest.mark.parametrize("n, expected, interior", [(1, (4, 2, 5), 1), (4, (25, 32, 56), None)])
def test_square_counts(n, expected, interior):
    m = gen_square_mesh(n)
    assert _counts(m) == expected
    if interior is not None:
        assert len(m.interior_edges) == interior


@pytest.mark.parametrize("rings, expected, nb", [(1, (7, 6, 12), 6), (2, (19, 24, 42), 12)])
def test_disk_counts(rings, expected, nb):
    m = gen_disk_mesh(rings)
    assert _counts(m) == expected
    assert len(m.boundary_edges) == nb


def test_coarsest_star_mesh_size():
    assert abs(gen_square_mesh(16).h_max - 2 * np.sqrt(2) / 16) < 1e-14


def test_disk_level_one_scale():
    # some ring count reproduces the coarsest DOF count of the reference tables
    dofs = {r: len(gen_disk_mesh(r).interior_edges) for r in range(36, 46)}
    best = min(dofs, key=lambda r: abs(dofs[r] - 14744))
    assert best == 41
    assert abs(dofs[best] - 14744) / 14744 < 0.02


@pytest.mark.parametrize("make", [lambda: gen_square_mesh(7), lambda: gen_disk_mesh(9),
                                  lambda: gen_square_mesh(3, (0.0, 2.0))])
def test_topology_invariants(make):
    m = make()
    assert m.n_edges == m.n_vertices + m.n_triangles - 1
    assert np.all(m.areas > 0)
    nb = (m.edge_tris[:, 1] < 0)
    assert np.all(m.edge_tris[:, 0] >= 0)
    assert len(m.boundary_edges) + len(m.interior_edges) == m.n_edges
    assert set(m.boundary_edges) == set(np.flatnonzero(nb))
    # each interior edge is traversed in opposite directions by its two triangles
    T = m.triangles
    for e in m.interior_edges[:200]:
        dirs = []
        for t in m.edge_tris[e]:
            j = int(np.flatnonzero(m.tri_edges[t] == e)[0])
            dirs.append((T[t][(j + 1) % 3], T[t][(j + 2) % 3]))
        assert dirs[0] == dirs[1][::-1]
    # local edge j is opposite vertex j
    for t in range(0, m.n_triangles, 7):
        for j in range(3):
            assert T[t][j] not in m.edges[m.tri_edges[t, j]]


def test_disk_boundary_on_circle():
    for radius in (1.0, 2.5):
        m = gen_disk_mesh(13, radius)
        bv = np.unique(m.edges[m.boundary_edges])
        r = np.hypot(*m.vertices[bv].T)
        assert np.max(np.abs(r - radius)) <= 1e-14 * radius
        assert len(bv) == 6 * 13


@pytest.mark.parametrize("gen, n", [(gen_disk_mesh, 8), (gen_disk_mesh, 20), (gen_square_mesh, 6)])
def test_h_halves(gen, n):
    ratio = gen(n).h_max / gen(2 * n).h_max
    assert abs(ratio - 2.0) <= 0.2


def test_disk_quasi_uniform():
    q = [np.max(m.diameters) / np.min(m.inradii) for m in map(gen_disk_mesh, (4, 8, 16, 32, 64))]
    assert max(q) < 1.5 * min(q)
    assert max(q) < 12.0


def test_round_trip():
    for m in (gen_square_mesh(1), gen_disk_mesh(5)):
        m2 = load_mesh(save_mesh(m))
        assert m2 == m
        assert np.array_equal(m2.vertices, m.vertices)
    m = load_mesh(save_mesh(gen_square_mesh(1)))
    assert (m.n_vertices, m.n_triangles) == (4, 2)


def test_comments_and_blank_lines():
    text = "# square\n3 1\n0 0\n\n1 0  # b\n0 1\n0 1 2\n"
    m = load_mesh(text)
    assert m.n_triangles == 1 and m.n_edges == 3


@pytest.mark.parametrize("text, line", [
    ("3 1\n0 0\n1 0\n0 1\n0 1 5\n", 5),
    ("3 1\n0 0\n1 0\n0 1\n0 2 1\n", 5),
    ("3 1\n0 0\n1 x\n0 1\n0 1 2\n", 3),
    ("3\n", 1),
    ("3 2\n0 0\n1 0\n0 1\n0 1 2\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(MeshParseError) as ei:
        load_mesh(text)
    assert ei.value.line == line
    assert f"line {line}" in str(ei.value)


def test_blank_input():
    with pytest.raises(MeshParseError, match="empty"):
        load_mesh("  \n# nothing\n")


def test_invalid_generators_and_meshes():
    with pytest.raises(InvalidParameterError):
        gen_square_mesh(0)
    with pytest.raises(InvalidParameterError):
        gen_disk_mesh(0)
    with pytest.raises(InvalidMeshError):
        Mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])
    with pytest.raises(InvalidMeshError):
        Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 3]])


def test_locate(rng):
    m = gen_disk_mesh(6)
    pts = rng.uniform(-0.7, 0.7, (200, 2))
    k = m.locate(pts)
    assert np.all(k >= 0)
    for p, t in zip(pts, k):
        P = m.vertices[m.triangles[t]]
        lam = np.linalg.solve(np.vstack([P.T, np.ones(3)]), np.append(p, 1.0))
        assert lam.min() >= -1e-12
    assert np.all(m.locate([[2.0, 0.0], [0.0, -1.01]]) == -1)
    # vertices belong to some incident triangle
    v = m.locate(m.vertices[:10])
    for i, t in enumerate(v):
        assert i in m.triangles[t]
