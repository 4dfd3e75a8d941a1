import json

import numpy as np
import pytest

from mtffm import export
from mtffm.cli import main
from mtffm.config import ConfigError, DesignConfig, load_config, parse_config
from mtffm.identities import nielsen_sum
from mtffm.kapteyn import DesignCoefficients, WaveformParams
from mtffm.waveform import acf, line_coefficients

SMALL = """\
# small design for tests
T = 1.0
delta_f = 30
K = 4
seed = 3
max_evals = 24
"""


def write_cfg(tmp_path, text, out="out"):
    path = tmp_path / "design.cfg"
    path.write_text(text + f"output_dir = {tmp_path / out}\n")
    return path


@pytest.fixture(scope="module")
def design_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("design")
    cfg = write_cfg(tmp, SMALL)
    assert main(["design", str(cfg)]) == 0
    return tmp / "out"


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg == DesignConfig()
        assert cfg.tbp == 200.0 and cfg.resolved_sample_rate == 3200.0

    def test_parse_values_and_comments(self):
        cfg = parse_config("T = 2  # seconds\ndelta_f=50\nz = 0.1, -0.2\noutput_dir = 'x y'\n")
        assert cfg.T == 2.0 and cfg.delta_f == 50.0
        assert cfg.z == (0.1, -0.2) and cfg.K == 2
        assert cfg.output_dir == "x y"

    @pytest.mark.parametrize(
        "text",
        [
            "bogus = 1",
            "T = 1\nT = 2",
            "T = abc",
            "T = -1",
            "delta = 1.5",
            "K = 0",
            "just words",
            "z = 0.6, 0.3",
            "z = nan",
            "delta_f = 100\nsample_rate = 700",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")

    def test_env_override(self, monkeypatch, tmp_path):
        monkeypatch.setenv("MTFFM_OUTPUT_DIR", str(tmp_path / "env"))
        assert DesignConfig(output_dir="ignored").resolved_output_dir() == tmp_path / "env"


class TestExport:
    def test_columns_roundtrip(self, tmp_path):
        x = np.array([0.1, 1 / 3, -2e-300])
        export.write_columns(tmp_path / "a.csv", ["x", "y"], [x, 2 * x])
        back = export.read_columns(tmp_path / "a.csv")
        assert np.array_equal(back["x"], x) and np.array_equal(back["y"], 2 * x)

    def test_matrix_roundtrip(self, tmp_path):
        rows, cols = np.array([0.5, 1.5]), np.array([-1.0, 0.0, 1.0])
        vals = np.arange(6.0).reshape(2, 3) / 7
        export.write_matrix(tmp_path / "m.csv", "r\\c", rows, cols, vals)
        r, c, v = export.read_matrix(tmp_path / "m.csv")
        assert np.array_equal(r, rows) and np.array_equal(c, cols) and np.array_equal(v, vals)
        assert (tmp_path / "m.csv").read_text().startswith("r\\c,")


class TestDesign:
    def test_all_products_follow_schema(self, design_dir):
        schema = export.load_schema()["files"]
        for name, spec in schema.items():
            path = design_dir / name
            assert path.exists(), name
            first = path.read_text().splitlines()[0]
            if spec["kind"] == "vector":
                assert first.split(",") == spec["columns"]
            elif spec["kind"] == "matrix":
                assert first.split(",")[0] == spec["corner"]
            else:
                assert sorted(json.loads(path.read_text())) == sorted(spec["keys"])

    def test_summary_roundtrip(self, design_dir):
        summary = json.loads((design_dir / "summary.json").read_text())
        z = export.read_columns(design_dir / "z.csv")
        params = WaveformParams(1.0, 30.0, DesignCoefficients(z["z_optimized"]))
        assert summary["A_hz"] == pytest.approx(params.A, rel=1e-9)
        assert summary["weighted_sum"] == pytest.approx(params.coeffs.weighted_sum, rel=1e-9)
        assert summary["evals"] == 24
        assert summary["improvement_db"] == pytest.approx(summary["initial_isr_db"] - summary["final_isr_db"], abs=1e-9)
        assert summary["beta2_kapteyn"] == pytest.approx(summary["beta2_direct"], rel=1e-8)
        trace = export.read_columns(design_dir / "trace.csv")
        assert trace["isr_db"][0] == pytest.approx(summary["initial_isr_db"], abs=1e-9)
        assert trace["isr_db"][-1] == pytest.approx(summary["final_isr_db"], abs=1e-6)

    def test_acf_zero_doppler_cut(self, design_dir, tmp_path):
        cfg = write_cfg(tmp_path, SMALL)
        out = tmp_path / "surf.csv"
        args = ["af-surface", str(cfg), "--tau-points", "9", "--nu-points", "3", "--from-design", str(design_dir)]
        assert main(args + ["--out", str(out)]) == 0
        taus, nus, mag = export.read_matrix(out)
        assert np.array_equal(nus, [-10.0, 0.0, 10.0])
        z = export.read_columns(design_dir / "z.csv")["z_optimized"]
        lines = line_coefficients(WaveformParams(1.0, 30.0, DesignCoefficients(z)))
        assert np.allclose(mag[:, 1], np.abs(acf(lines, taus)), atol=1e-12)

    def test_af_surface_single_point(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL)
        out = tmp_path / "one.csv"
        assert main(["af-surface", str(cfg), "--tau-points", "1", "--nu-points", "1", "--out", str(out)]) == 0
        _, _, mag = export.read_matrix(out)
        assert mag.shape == (1, 1) and mag[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_thumbtack_sidelobes(self, tmp_path):
        # away from the origin the surface stays well below the peak
        cfg = write_cfg(tmp_path, "delta_f = 100\nK = 8\n")
        out = tmp_path / "s.csv"
        assert main(["af-surface", str(cfg), "--tau-points", "41", "--nu-points", "21", "--out", str(out)]) == 0
        taus, nus, mag = export.read_matrix(out)
        far = (np.abs(taus)[:, None] > 0.1) | (np.abs(nus)[None, :] > 5.0)
        assert 20 * np.log10(mag[far].max()) <= -10.0


class TestExportWaveform:
    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MTFFM_OUTPUT_DIR", str(tmp_path / "env_out"))
        cfg = write_cfg(tmp_path, "delta_f = 20\nz = 0.2, -0.1\n")
        assert main(["export-waveform", str(cfg)]) == 0
        wf = export.read_columns(tmp_path / "env_out" / "waveform.csv")
        assert wf["t_s"].size == 320
        assert np.allclose(wf["real"] ** 2 + wf["imag"] ** 2, 1.0)
        assert not (tmp_path / "out").exists()


class TestVerify:
    def test_passes(self, capsys):
        assert main(["verify"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "all identities hold" in out

    def test_injected_fault_detected(self, capsys):
        assert main(["verify", "--inject-fault"]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_single_tone_nielsen(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "K = 1\nz = 0.5\n")
        assert main(["verify", str(cfg)]) == 0
        assert "z=0.5: sum=0.062500000000" in capsys.readouterr().out
        assert nielsen_sum(0.5) == pytest.approx(0.0625, abs=1e-12)


class TestExitCodes:
    def test_bad_config(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("T = -1\n")
        assert main(["design", str(bad)]) == 2
        assert main(["export-waveform", str(tmp_path / "missing.cfg")]) == 2

    def test_infeasible_z(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("z = 0.9, 0.9\n")
        assert main(["verify", str(bad)]) == 2

    def test_usage_errors(self):
        assert main([]) == 2
        assert main(["af-surface"]) == 2

    def test_bad_grid(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL)
        assert main(["af-surface", str(cfg), "--tau-points", "0"]) == 2

    def test_numeric_failure(self, tmp_path):
        # an unmodulated pulse has no mainlobe null: ISR undefined
        cfg = write_cfg(tmp_path, "z = 0, 0\n")
        assert main(["export-waveform", str(cfg)]) == 3
