import numpy as np
import pytest

from stochfem.cli import (
    ConvergenceTable,
    RunConfig,
    export_realisations,
    main,
    parse_config,
    render_csv,
    _schedule_from_config,
)
from stochfem.errors import UsageError
from stochfem.meshing import build_icosphere
from stochfem.random_field import Problem
from stochfem.vtk_io import read_vtk


def test_no_arguments_is_usage_error():
    with pytest.raises(UsageError):
        parse_config([])
    assert main([]) == 2


def test_defaults():
    config = parse_config(["--problem", "surface"])
    assert config.problem is Problem.SURFACE
    assert config.norm == "l2"
    assert config.levels == (3, 6)
    assert config.m_schedule is None
    assert config.seed == 42
    assert config.eps_tol == 0.1
    assert config.sigma_tol == 0.3
    assert config.delta == 0.4
    assert config.threads == 1

    config = parse_config(["--problem", "bulk-surface"])
    assert config.levels == (2, 5)
    assert config.eps_tol == 0.02


def test_amplitude_guards():
    with pytest.raises(UsageError):
        parse_config(["--problem", "surface", "--eps-tol", "0.5"])
    with pytest.raises(UsageError):
        parse_config(["--problem", "surface", "--sigma-tol", "0.4"])
    with pytest.raises(UsageError):
        parse_config(["--problem", "surface", "--levels", "6..3"])
    with pytest.raises(UsageError):
        parse_config(["--problem", "surface", "--levels", "3..11"])
    with pytest.raises(UsageError):
        parse_config(["--problem", "surface", "--alpha", "0"])


def test_auto_m_pairing():
    config = parse_config(["--problem", "surface", "--levels", "3..6"])
    schedule = _schedule_from_config(config)
    assert schedule.entries == ((3, 1), (4, 16), (5, 256), (6, 4096))
    config = parse_config(
        ["--problem", "surface", "--levels", "3..6", "--norm", "h1"]
    )
    assert _schedule_from_config(config).entries == (
        (3, 64), (4, 256), (5, 1024), (6, 4096),
    )
    config = parse_config(
        ["--problem", "surface", "--levels", "2..3", "--m-schedule", "1,4"]
    )
    assert _schedule_from_config(config).entries == ((2, 1), (3, 4))
    config = parse_config(
        ["--problem", "surface", "--levels", "2..4", "--m-schedule", "1,4"]
    )
    with pytest.raises(UsageError):
        _schedule_from_config(config)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "problem = surface\n"
        "norm = h1   # trailing comment\n"
        "seed = 7\n"
        "\n"
    )
    config = parse_config(["--config", str(cfg)])
    assert config.norm == "h1" and config.seed == 7
    # explicit flags win over the file
    config = parse_config(["--config", str(cfg), "--seed", "9"])
    assert config.seed == 9

    bad = tmp_path / "bad.cfg"
    bad.write_text("volume = 11\n")
    with pytest.raises(UsageError):
        parse_config(["--config", str(bad)])
    nokv = tmp_path / "nokv.cfg"
    nokv.write_text("just words\n")
    with pytest.raises(UsageError):
        parse_config(["--config", str(nokv)])
    with pytest.raises(UsageError):
        parse_config(["--config", str(tmp_path / "missing.cfg")])


def test_render_csv_layout():
    t = ConvergenceTable(Problem.SURFACE, "l2", 42, ("l2",))
    t.add_row(0.2, 1, {"l2": 0.5})
    t.add_row(0.1, 16, {"l2": 0.125})
    csv = render_csv(t)
    lines = csv.strip().split("\n")
    assert lines[0] == "h,M,error_l2,eoc_h_l2,eoc_M_l2"
    first = lines[1].split(",")
    assert first[2] == "0.5"
    assert first[3] == "" and first[4] == ""  # first row has no eocs
    second = lines[2].split(",")
    assert float(second[3]) == pytest.approx(2.0)
    assert float(second[4]) == pytest.approx(-0.5)


def test_main_writes_csv_and_is_repeatable(tmp_path, capsys):
    argv = [
        "--problem", "surface", "--levels", "2..3", "--m-schedule", "1,4",
        "--out-dir", str(tmp_path), "--repeat", "2",
    ]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "wrote" in out
    csv_path = tmp_path / "table_surface_l2.csv"
    text = csv_path.read_text()
    assert text.startswith("h,M,error_l2")
    # byte-identical on a fresh invocation
    assert main(argv) == 0
    assert csv_path.read_text() == text


def _export_config(problem, tmp_path, eps_tol, level=2, seed=42):
    return RunConfig(
        problem=problem, norm="l2", levels=(level, level), m_schedule=None,
        seed=seed, alpha=1.0, beta=1.0, eps_tol=eps_tol, sigma_tol=0.3,
        delta=0.4, out_dir=tmp_path, export_samples=0, repeat=1, threads=1,
    )


def test_export_amplitude_zero_keeps_reference_coordinates(tmp_path):
    config = _export_config(Problem.SURFACE, tmp_path, eps_tol=0.0)
    (path,) = export_realisations(config, 1)
    data = read_vtk(path)
    mesh = build_icosphere(2)
    np.testing.assert_allclose(data["points"], mesh.vertices, atol=1e-12)
    assert len(data["cells"]) == len(mesh.triangles)


def test_export_distinct_samples_and_round_trip(tmp_path):
    config = _export_config(Problem.SURFACE, tmp_path, eps_tol=0.1)
    paths = export_realisations(config, 3)
    assert len(paths) == 3
    assert len({p.read_text() for p in paths}) == 3
    mesh = build_icosphere(2)
    for p in paths:
        data = read_vtk(p)
        assert data["points"].shape == (len(mesh.vertices), 3)
        assert len(data["cells"]) == len(mesh.triangles)
        assert len(data["point_data"]["solution"]) == len(mesh.vertices)


def test_export_coupled_writes_bulk_and_curve(tmp_path):
    config = _export_config(Problem.BULK_SURFACE, tmp_path, eps_tol=0.02)
    paths = export_realisations(config, 1)
    assert len(paths) == 2
    from stochfem.meshing import build_disk_mesh

    mesh = build_disk_mesh(2)
    bulk = read_vtk(paths[0])
    assert bulk["cell_kind"] == "CELLS"
    assert bulk["points"].shape == (len(mesh.vertices), 3)
    curve = read_vtk(paths[1])
    assert curve["cell_kind"] == "LINES"
    ne = len(mesh.boundary_edges)
    assert curve["points"].shape == (ne, 3)
    assert len(curve["cells"]) == ne
    # deformed boundary stays near the unit circle
    r = np.linalg.norm(curve["points"][:, :2], axis=1)
    assert np.all(np.abs(r - 1.0) < 0.3)
