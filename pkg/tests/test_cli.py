import numpy as np
import pytest

from mdsd.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from mdsd.grids import GridSpec, IntensityGrid, write_grid


class TestInvert:
    def test_point_values(self, capsys):
        assert main(["invert", "--adust", "2.6465"]) == EXIT_OK
        out = capsys.readouterr().out
        n_line, v_line = out.splitlines()
        assert float(n_line.split("=")[1].split()[0]) == pytest.approx(1e8, rel=0.01)
        assert float(v_line.split("=")[1].split()[0]) == pytest.approx(0.344, rel=0.01)

    def test_clear_air(self, capsys):
        assert main(["invert", "--adust", "0"]) == EXIT_OK
        assert "clear air" in capsys.readouterr().out

    def test_negative_rejected(self, capsys):
        assert main(["invert", "--adust", "-1"]) == EXIT_CONFIG


class TestErrprop:
    def test_table(self, capsys):
        assert main(["errprop", "--freq", "1e12", "--n", "1e8"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "total_sigma" in out
        total = float(out.splitlines()[-1].split("=")[1].split()[0])
        assert total > 0

    def test_bad_freq(self):
        assert main(["errprop", "--freq", "-1"]) == EXIT_CONFIG


class TestAttenuation:
    def test_with_catalog(self, tmp_path, capsys, co2_catalog_text):
        par = tmp_path / "lines.par"
        par.write_text(co2_catalog_text)
        code = main(["attenuation", "--freq", "1e12", "--catalog", str(par)])
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "k(f)" in out and "A_abs" in out

    def test_missing_catalog(self, capsys):
        assert main(["attenuation", "--freq", "1e12", "--catalog", "/nope.par"]) == EXIT_DATA

    def test_malformed_catalog(self, tmp_path, capsys):
        par = tmp_path / "bad.par"
        par.write_text("this is not a fixed-width record\n")
        assert main(["attenuation", "--freq", "1e12", "--catalog", str(par)]) == EXIT_DATA


class TestIngest:
    def test_valid_grid(self, tmp_path, capsys):
        path = tmp_path / "ok.grid"
        spec = GridSpec(0.0, 2.0, 0.0, 2.0, 2, 2)
        values = np.array([[1.0, np.nan], [2.0, 3.0]])
        write_grid(path, IntensityGrid(spec, values))
        assert main(["ingest", "--check", str(path)]) == EXIT_OK
        assert "3/4 valid cells" in capsys.readouterr().out

    def test_invalid_grid(self, tmp_path, capsys):
        path = tmp_path / "bad.grid"
        path.write_text("MDSD-GRID v9\n")
        assert main(["ingest", "--check", str(path)]) == EXIT_DATA
        assert "data error" in capsys.readouterr().err


class TestSimulate:
    CONFIG = """
run.seeds = 0
season.name = storm
network.node_counts = 8
network.l_max = 12
network.area_width = 30
network.area_height = 15
channel.calibration_sols = 1
channel.season_sols = 1
field.nx = 16
field.ny = 8
interp.methods = nearest
"""

    def test_end_to_end(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(self.CONFIG)
        out_dir = tmp_path / "results"
        code = main(["simulate", str(cfg), "--output-dir", str(out_dir)])
        assert code == EXIT_OK
        assert (out_dir / "metrics.csv").is_file()
        assert "metric rows" in capsys.readouterr().out

    def test_bad_config_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("garbage\n")
        assert main(["simulate", str(cfg)]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file(self, capsys):
        assert main(["simulate", "/no/such/file.cfg"]) == EXIT_CONFIG


class TestParser:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_no_command(self):
        with pytest.raises(SystemExit):
            main([])
