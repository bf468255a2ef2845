import numpy as np
import pytest

from stochfem.errors import UsageError
from stochfem.meshing import build_disk_mesh, build_icosphere
from stochfem.vtk_io import (
    read_vtk,
    write_bulk_vtk,
    write_curve_vtk,
    write_surface_vtk,
)


def test_surface_round_trip(tmp_path):
    mesh = build_icosphere(1)
    values = mesh.vertices[:, 2]
    path = tmp_path / "surf.vtk"
    write_surface_vtk(path, mesh.vertices, mesh.triangles, values, name="height")
    data = read_vtk(path)
    assert data["cell_kind"] == "POLYGONS"
    assert len(data["cells"]) == len(mesh.triangles)
    np.testing.assert_array_equal(np.array(data["cells"]), mesh.triangles)
    np.testing.assert_array_equal(data["points"], mesh.vertices)
    np.testing.assert_array_equal(data["point_data"]["height"], values)


def test_curve_round_trip(tmp_path):
    theta = np.linspace(0.0, 2.0 * np.pi, 9)[:-1]
    pts = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    segs = np.stack([np.arange(8), np.roll(np.arange(8), -1)], axis=1)
    values = np.sin(theta)
    path = tmp_path / "curve.vtk"
    write_curve_vtk(path, pts, segs, values)
    data = read_vtk(path)
    assert data["cell_kind"] == "LINES"
    assert data["points"].shape == (8, 3)  # 2D points are padded with z = 0
    np.testing.assert_array_equal(data["points"][:, :2], pts)
    np.testing.assert_array_equal(data["points"][:, 2], 0.0)
    np.testing.assert_array_equal(np.array(data["cells"]), segs)
    np.testing.assert_array_equal(data["point_data"]["solution"], values)


def test_bulk_round_trip(tmp_path):
    mesh = build_disk_mesh(1)
    values = mesh.vertices[:, 0] ** 2
    path = tmp_path / "bulk.vtk"
    write_bulk_vtk(path, mesh.vertices, mesh.triangles, values)
    data = read_vtk(path)
    assert data["cell_kind"] == "CELLS"
    np.testing.assert_array_equal(np.array(data["cells"]), mesh.triangles)
    np.testing.assert_array_equal(data["point_data"]["solution"], values)
    with open(path) as f:
        text = f.read()
    assert "UNSTRUCTURED_GRID" in text
    assert "CELL_TYPES" in text


def test_values_survive_bit_exact(tmp_path):
    # repr-based formatting: floats round-trip without loss
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(5, 3))
    tris = np.array([[0, 1, 2], [2, 3, 4]])
    values = rng.normal(size=5) * 1e-7
    path = tmp_path / "exact.vtk"
    write_surface_vtk(path, pts, tris, values)
    data = read_vtk(path)
    np.testing.assert_array_equal(data["points"], pts)
    np.testing.assert_array_equal(data["point_data"]["solution"], values)


def test_malformed_cell_row(tmp_path):
    path = tmp_path / "bad.vtk"
    write_surface_vtk(path, np.eye(3), np.array([[0, 1, 2]]), np.zeros(3))
    text = path.read_text().replace("3 0 1 2", "4 0 1 2")
    path.write_text(text)
    with pytest.raises(UsageError):
        read_vtk(path)


def test_missing_points_section(tmp_path):
    path = tmp_path / "empty.vtk"
    path.write_text("# vtk DataFile Version 3.0\nempty\nASCII\n")
    with pytest.raises(UsageError):
        read_vtk(path)
