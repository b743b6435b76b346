import numpy as np
import pytest

from axmaxwell import cli_io, mesh
from axmaxwell.cli_io import main, read_csv, write_csv, write_vtk


def test_meshgen_writes_loadable_mesh(tmp_path, capsys):
    rc = main([
        "meshgen", "--domain", "lshape", "--h", "0.1",
        "--outdir", str(tmp_path), "--out", "m.txt",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "alpha 0.666666666667" in out
    m = mesh.load_mesh(tmp_path / "m.txt")
    assert m.num_vertices == 96


def test_singular_subcommand(tmp_path):
    rc = main([
        "singular", "--domain", "lshape", "--h", "0.2", "--k", "1",
        "--field", "magnetic", "--outdir", str(tmp_path), "--out", "b",
    ])
    assert rc == 0
    text = (tmp_path / "b.vtk").read_text()
    assert "POINTS 21 double" in text
    assert "basis_total_r_re" in text
    assert "CELL_DATA" in text
    header, rows = read_csv(tmp_path / "b_diag.csv")
    assert header[0] == "k"
    assert len(rows) == 1


def test_solve_outputs_and_determinism(tmp_path):
    args = [
        "solve", "--domain", "lshape", "--h", "0.2", "--field", "magnetic",
        "--rhs", "bandlimited", "--modes", "3",
    ]
    rc = main(args + ["--outdir", str(tmp_path / "a")])
    assert rc == 0
    rc = main(args + ["--outdir", str(tmp_path / "b")])
    assert rc == 0
    sa = (tmp_path / "a" / "summary.csv").read_bytes()
    sb = (tmp_path / "b" / "summary.csv").read_bytes()
    assert sa == sb
    assert (tmp_path / "a" / "mode_p3.vtk").exists()
    assert (tmp_path / "a" / "mode_m3.vtk").exists()


def test_synthesize_writes_wedges(tmp_path):
    rc = main([
        "synthesize", "--domain", "rectangle", "--h", "0.25", "--field", "magnetic",
        "--rhs", "cos_theta_ez", "--modes", "1", "--theta-samples", "8",
        "--outdir", str(tmp_path),
    ])
    assert rc == 0
    text = (tmp_path / "field3d.vtk").read_text()
    assert "CELL_TYPES" in text and "13" in text


def test_convergence_csv(tmp_path):
    rc = main([
        "convergence", "--field", "magnetic", "--levels", "2", "--k", "0",
        "--outdir", str(tmp_path),
    ])
    assert rc == 0
    header, rows = read_csv(tmp_path / "convergence.csv")
    assert header == ["k", "h", "l2_error", "energy_error", "l2_rate", "energy_rate"]
    assert float(rows[0][4]) >= 1.8


def test_config_file_with_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("domain = lshape\nh = 0.2\nfield = magnetic\nmodes = 1\n")
    rc = main([
        "solve", "--config", str(cfg), "--modes", "2",
        "--rhs", "uniform_ez", "--outdir", str(tmp_path / "out"),
    ])
    assert rc == 0
    header, rows = read_csv(tmp_path / "out" / "summary.csv")
    assert len(rows) == 5  # modes overridden to 2 -> k in [-2, 2]


def test_unknown_flag_fails_with_usage_code(capsys):
    assert main(["solve", "--no-such-flag"]) == 1
    err = capsys.readouterr().err
    assert err.startswith("error: usage:")
    assert "\n" not in err.strip()


def test_unknown_rhs_fails(tmp_path):
    rc = main([
        "solve", "--domain", "rectangle", "--h", "0.5", "--rhs", "nope",
        "--outdir", str(tmp_path),
    ])
    assert rc == 1


def test_missing_corner_is_usage_error(tmp_path):
    rc = main([
        "singular", "--domain", "rectangle", "--h", "0.25", "--k", "0",
        "--field", "electric", "--outdir", str(tmp_path),
    ])
    assert rc == 1


def test_io_failure_exit_code(tmp_path, capsys):
    rc = main([
        "meshgen", "--domain", "rectangle", "--h", "0.5",
        "--outdir", str(tmp_path / "missing" / "deep"),
    ])
    assert rc == 3
    assert capsys.readouterr().err.startswith("error: io:")


def test_help_documents_flags(capsys):
    for cmd in ("meshgen", "singular", "solve", "synthesize", "convergence"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--outdir" in out or cmd == "verify"


def test_csv_round_trip(tmp_path):
    rows = [[1, 0.1 + 0.2j, 1.0 / 3.0], [2, -0.5j, 2.0 / 7.0]]
    path = tmp_path / "t.csv"
    write_csv(path, ["k", "c", "x"], rows)
    header, back = read_csv(path)
    assert header == ["k", "c", "x"]
    for row, orig in zip(back, rows):
        assert complex(row[1]) == orig[1]
        assert float(row[2]) == orig[2]  # %.17g round-trips doubles exactly


def test_vtk_geometry_only(tmp_path, rect):
    path = tmp_path / "geo.vtk"
    write_vtk(rect, {}, path)
    text = path.read_text()
    assert f"POINTS {rect.num_vertices} double" in text
    assert "POINT_DATA" not in text
    assert text.count("\n3 ") + text.startswith("3 ") >= rect.num_triangles - 1


def test_vtk_point_count_matches(tmp_path, rect, rng):
    path = tmp_path / "f.vtk"
    vals = rng.normal(size=(rect.num_vertices, 3)) + 1j * rng.normal(size=(rect.num_vertices, 3))
    write_vtk(rect, {"field": vals}, path)
    text = path.read_text().splitlines()
    npts = int([ln for ln in text if ln.startswith("POINTS")][0].split()[1])
    assert npts == rect.num_vertices
    names = [ln.split()[1] for ln in text if ln.startswith("SCALARS")]
    assert "field_r_re" in names and "field_r_im" in names


def test_duplicate_field_names_rejected(tmp_path, rect):
    with pytest.raises(ValueError):
        write_vtk(rect, {"a": np.zeros(rect.num_vertices)}, tmp_path / "x.vtk",
                  cell_fields={"a": np.zeros(rect.num_triangles)})


def test_tabulated_rhs_round_trip(tmp_path):
    m = mesh.gen_rectangle(0.0, 1.0, 0.0, 1.0, 0.5)
    rows = [
        [r, z, r * z, 0.0, 1.0 - r] for r, z in m.vertices
    ]
    path = tmp_path / "rhs.csv"
    write_csv(path, ["r", "z", "f_r", "f_theta", "f_z"], rows)
    f = cli_io.resolve_rhs(f"file:{path}", m)
    got = f(0.5, 0.0, 0.5)
    assert got[0] == pytest.approx(0.25, abs=1e-12)
    assert got[2] == pytest.approx(0.5, abs=1e-12)


def test_verify_command_passes(capsys):
    assert cli_io.cmd_verify() == 0
    out = capsys.readouterr().out
    assert "11/11 criteria passed" in out
