import numpy as np
import pytest

from ifemeig import (InvalidParameterError, LevelSetInterface, assemble_system, build_bases,
                     export_field, gen_disk_mesh, solve_gevp, write_csv, write_vtk)
from ifemeig.export import field_samples, read_vtk_points

SOFT = LevelSetInterface.circle(0.38, beta_minus=1.0, beta_plus=1000.0)


@pytest.fixture(scope="module")
def bases():
    return build_bases(gen_disk_mesh(12), SOFT)


def test_constant_exports_one(bases, tmp_path):
    u = np.ones(bases.mesh.n_edges)
    path = write_vtk(tmp_path / "one.vtk", bases, u)
    pts, vals = read_vtk_points(path)
    assert np.allclose(vals, 1.0, atol=1e-12)
    # one point per sub-triangle corner
    assert len(pts) == 3 * len(bases.cut.sub_elem)
    n_sub = np.bincount(bases.cut.sub_elem, minlength=bases.n_elements)
    assert len(pts) == 3 * n_sub.sum()
    assert set(np.unique(n_sub)) <= {1, 3}


def test_vtk_layout(bases, tmp_path):
    u = np.ones(bases.mesh.n_edges)
    text = open(write_vtk(tmp_path / "f.vtk", bases, u, name="u1")).read()
    ns = len(bases.cut.sub_elem)
    assert text.startswith("# vtk DataFile Version 3.0")
    assert f"CELLS {ns} {4 * ns}" in text and f"CELL_TYPES {ns}" in text
    assert "SCALARS side int 1" in text and "SCALARS u1 double 1" in text


def test_csv(bases, tmp_path):
    u = np.ones(bases.mesh.n_edges)
    path = write_csv(tmp_path / "f.csv", bases, u)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert open(path).readline().strip() == "x,y,value"
    assert data.shape == (3 * len(bases.cut.sub_elem), 3)
    assert export_field(tmp_path / "g.csv", bases, u).endswith("g.csv")
    with pytest.raises(InvalidParameterError):
        export_field(tmp_path / "g.png", bases, u, fmt="png")


def test_unwritable_path(bases):
    with pytest.raises(OSError):
        write_vtk("/nonexistent-dir/x.vtk", bases, np.ones(bases.mesh.n_edges))


def test_first_eigenfunction_radially_symmetric():
    bases = build_bases(gen_disk_mesh(40), SOFT)
    A, M, dofmap = assemble_system(bases, 1.0)
    sol = solve_gevp(A, M, 1)
    u = dofmap.expand(sol.eigenvectors[:, 0])
    pts, vals, _ = field_samples(bases, u)
    peak = np.abs(vals).max()
    r = np.linspace(0.05, 0.9, 12)
    th = np.linspace(0.1, 1.4, 5)
    R, T = np.meshgrid(r, th)
    p = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
    q = np.column_stack([-p[:, 1], p[:, 0]])                   # rotated by pi/2
    a, b = bases.evaluate_points(u, p), bases.evaluate_points(u, q)
    assert np.abs(a - b).max() <= 1e-2 * peak
