"""Smoke and parse-fidelity tests over fixture outputs committed from the
solver CLI (eigen stability, short-time attachment run, LOBC sweep,
barrier report)."""

import csv
import json
import shutil
from pathlib import Path

import pytest

from fraclobc_plots import MissingInput, SchemaMismatch, render
from fraclobc_plots.cli import main
from fraclobc_plots import io

FIXTURES = Path(__file__).parent / "fixtures"


def raw_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


class TestRenderSmoke:
    @pytest.mark.parametrize(
        "kind,subdir,style",
        [
            ("eigen_stability", "eigen", {}),
            ("trace", "local", {}),
            ("snapshots", "local", {}),
            ("z_curve", "sweep", {"monitors": "monitors_scale_8.csv"}),
            ("f_beta", "barrier", {}),
            ("barrier_slack", "barrier", {}),
        ],
    )
    def test_every_kind_renders(self, tmp_path, kind, subdir, style):
        out = tmp_path / f"{kind}.png"
        render(kind, FIXTURES / subdir, out, style)
        assert out.is_file() and out.stat().st_size > 1000

    def test_cli_end_to_end(self, tmp_path):
        out = tmp_path / "eigen.png"
        code = main(["eigen_stability", "--in", str(FIXTURES / "eigen"),
                     "--out", str(out)])
        assert code == 0 and out.is_file()

    def test_cli_missing_input(self, tmp_path):
        code = main(["eigen_stability", "--in", str(tmp_path),
                     "--out", str(tmp_path / "x.png")])
        assert code == 1


class TestParseFidelity:
    def test_eigen_series_equal_csv(self):
        cols = io.read_eigen_family(FIXTURES / "eigen")
        header, rows = raw_csv(FIXTURES / "eigen" / "eigen_stability.csv")
        assert tuple(header) == io.EIGEN_COLUMNS
        for j, name in enumerate(header):
            assert cols[name] == [float(r[j]) for r in rows]

    def test_monitor_series_equal_csv(self):
        cols = io.read_monitors(FIXTURES / "local")
        header, rows = raw_csv(FIXTURES / "local" / "monitors.csv")
        assert tuple(header) == io.MONITOR_COLUMNS
        for j, name in enumerate(header):
            assert cols[name] == [float(r[j]) for r in rows]

    def test_snapshot_series_equal_csv(self):
        snaps = io.read_snapshots(FIXTURES / "local")
        for name, cols in snaps:
            header, rows = raw_csv(FIXTURES / "local" / f"{name}.csv")
            assert tuple(header) == io.SNAPSHOT_COLUMNS
            assert cols["x"] == [float(r[0]) for r in rows]
            assert cols["u"] == [float(r[1]) for r in rows]

    def test_sweep_with_empty_cells(self):
        cols = io.read_sweep(FIXTURES / "sweep")
        header, rows = raw_csv(FIXTURES / "sweep" / "lobc_sweep.csv")
        for j, name in enumerate(header):
            expect = [None if r[j] == "" else float(r[j]) for r in rows]
            assert cols[name] == expect
        # the sweep fixture brackets the onset: attached below, LOBC above
        assert cols["lobc_time"][0] is None
        assert cols["lobc_time"][-1] is not None

    def test_f_beta_series_equal_csv(self):
        cols = io.read_f_beta(FIXTURES / "barrier")
        header, rows = raw_csv(FIXTURES / "barrier" / "f_beta.csv")
        for j, name in enumerate(header):
            assert cols[name] == [float(r[j]) for r in rows]

    def test_barrier_report_fields(self):
        rep = io.read_barrier_report(FIXTURES / "barrier")
        assert rep["min_slack"] > 0
        assert rep["samples"]

    def test_manifest_hashes_cover_files(self):
        manifest = io.read_manifest(FIXTURES / "eigen")
        names = {f["path"] for f in manifest["files"]}
        assert "eigen_stability.csv" in names


class TestSchemaErrors:
    def test_missing_directory(self, tmp_path):
        with pytest.raises(MissingInput):
            io.read_monitors(tmp_path)

    def test_header_mismatch(self, tmp_path):
        bad = tmp_path / "monitors.csv"
        bad.write_text("t,z\n0.0,1.0\n")
        with pytest.raises(SchemaMismatch):
            io.read_monitors(tmp_path)

    def test_non_numeric_cell(self, tmp_path):
        src = FIXTURES / "eigen" / "eigen_stability.csv"
        dst = tmp_path / "eigen_stability.csv"
        lines = src.read_text().splitlines()
        lines[1] = lines[1].replace(lines[1].split(",")[1], "bogus", 1)
        dst.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaMismatch):
            io.read_eigen_family(tmp_path)

    def test_ragged_row(self, tmp_path):
        dst = tmp_path / "eigen_stability.csv"
        shutil.copy(FIXTURES / "eigen" / "eigen_stability.csv", dst)
        with open(dst, "a", newline="") as fh:
            fh.write("1.0,2.0\n")
        with pytest.raises(SchemaMismatch):
            io.read_eigen_family(tmp_path)

    def test_invalid_json(self, tmp_path):
        (tmp_path / "report.json").write_text("{not json")
        with pytest.raises(SchemaMismatch):
            io.read_barrier_report(tmp_path)

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ValueError):
            render("histogram", FIXTURES / "eigen", tmp_path / "x.png")


class TestWitnessOverlay:
    def test_zdot_report_has_witness(self):
        rep = json.loads((FIXTURES / "sweep" / "zdot_report.json").read_text())
        assert rep["C5"] > 0
        wit = rep["witness"]
        p = rep["p"]
        expect = wit["t0"] + wit["M0"] ** (1 - p) / (wit["C"] * (p - 1))
        assert wit["blowup_time"] == pytest.approx(expect, rel=1e-12)

    def test_z_curve_uses_witness(self, tmp_path):
        out = tmp_path / "z.png"
        render("z_curve", FIXTURES / "sweep", out,
               {"monitors": "monitors_scale_8.csv"})
        assert out.is_file() and out.stat().st_size > 1000


class TestFigureSpec:
    def test_render_via_spec(self, tmp_path):
        from fraclobc_plots import FigureSpec, render_figure

        out = tmp_path / "eigen.png"
        spec = FigureSpec(kind="eigen_stability",
                          input_dir=str(FIXTURES / "eigen"),
                          output=str(out))
        render_figure(spec)
        assert out.is_file()

    def test_spec_rejects_unknown_kind(self):
        from fraclobc_plots import FigureSpec

        with pytest.raises(ValueError):
            FigureSpec(kind="pie", input_dir=".", output="x.png")
