"""File formats, config validation, CLI subcommands, and manifest round-trips."""

import math

import numpy as np
import pytest
import yaml

from biphoton import fileio
from biphoton.cli import main
from biphoton.config import load_experiment
from biphoton.errors import ConfigError
from biphoton.geometry import Grid, letter_n_raster
from biphoton.presets import preset_config
from biphoton.runner import run_experiment

PI = math.pi


def tiny_scan_config(seed=11):
    return {
        "kind": "scan",
        "label": "tiny",
        "state": {
            "envelope_a": {"kind": "ring", "waist": 1.0, "index": 2},
            "envelope_b": {"kind": "ring", "waist": 1.0, "index": 2},
            "mask_a": {"kind": "helical", "charge": 2},
            "mask_b": {"kind": "helical", "charge": 2},
            "sign": 1,
            "visibility": 1.0,
        },
        "grid": {"n": 128, "extent": 4.0},
        # slope sign needs angles > 4*m_b to avoid period aliasing
        "scan": {"mask_width": PI / 4, "angles": 12, "heralds_per_angle": 2000,
                 "phi_bins": 45, "showcase_angles": [0]},
        "singles_events": 40_000,
        "seed": seed,
    }


class TestPgm:
    def test_16bit_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        counts = rng.integers(0, 40_000, size=(32, 48)).astype(np.int64)
        path = tmp_path / "img.pgm"
        fileio.write_pgm(path, counts)
        back, maxval = fileio.read_pgm(path)
        assert maxval == 65535
        assert np.array_equal(back, counts)

    def test_8bit_roundtrip(self, tmp_path):
        counts = np.arange(64).reshape(8, 8) % 256
        path = tmp_path / "img8.pgm"
        fileio.write_pgm(path, counts, maxval=255)
        back, maxval = fileio.read_pgm(path)
        assert maxval == 255
        assert np.array_equal(back, counts)

    def test_counts_clamped(self, tmp_path):
        counts = np.array([[70_000, 3]])
        path = tmp_path / "clamp.pgm"
        fileio.write_pgm(path, counts)
        back, _ = fileio.read_pgm(path)
        assert back[0, 0] == 65535

    def test_bitmap_raster_linear_map(self, tmp_path):
        gray = np.array([[0, 128, 255]], dtype=np.int64)
        path = tmp_path / "g.pgm"
        fileio.write_pgm(path, gray, maxval=255, flip=False)
        raster = fileio.load_bitmap_raster(path)
        assert raster[0, 0] == pytest.approx(0.0)
        assert raster[0, 1] == pytest.approx(128 / 255)
        assert raster[0, 2] == pytest.approx(1.0)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P3\n2 2\n255\n")
        with pytest.raises(ConfigError):
            fileio.read_pgm(path)

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "trunc.pgm"
        path.write_bytes(b"P5\n4 4\n255\nab")
        with pytest.raises(ConfigError):
            fileio.read_pgm(path)


class TestCsv:
    def test_image_csv_roundtrip(self, tmp_path):
        grid = Grid(n_x=16, n_y=16, extent=2.0)
        counts = np.zeros((16, 16), dtype=np.int64)
        counts[3, 5] = 7
        counts[15, 0] = 2
        path = tmp_path / "img.csv"
        fileio.write_image_csv(path, counts, grid)
        back, back_grid = fileio.read_image_csv(path)
        assert np.array_equal(back, counts)
        assert back_grid == grid

    def test_corrupted_csv_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# ny=4,nx=4,extent=2\nrow,col,count\n1,2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="line 3"):
            fileio.read_image_csv(path)

    def test_non_numeric_cell_names_line(self, tmp_path):
        path = tmp_path / "bad2.csv"
        path.write_text(
            "# ny=4,nx=4,extent=2\nrow,col,count\n1,2,x\n", encoding="utf-8"
        )
        with pytest.raises(ConfigError, match="line 3"):
            fileio.read_image_csv(path)

    def test_out_of_range_pixel_rejected(self, tmp_path):
        path = tmp_path / "bad3.csv"
        path.write_text(
            "# ny=4,nx=4,extent=2\nrow,col,count\n9,2,1\n", encoding="utf-8"
        )
        with pytest.raises(ConfigError, match="line 3"):
            fileio.read_image_csv(path)

    def test_map_csv_roundtrip(self, tmp_path):
        from biphoton.analysis import CoherenceMap

        values = np.arange(12.0).reshape(6, 2)
        values[2, 1] = np.nan
        cmap = CoherenceMap(
            phi_centers=np.linspace(0.1, 6.1, 6),
            phi_p_angles=np.array([0.0, PI]),
            values=values,
            kind="g2",
            counts=np.ones((6, 2)),
            valid=np.array([True, True]),
        )
        path = tmp_path / "map.csv"
        fileio.write_map_csv(path, cmap)
        phis, angles, back = fileio.read_map_csv(path)
        assert np.allclose(phis, cmap.phi_centers)
        assert np.allclose(angles, cmap.phi_p_angles)
        assert np.allclose(back[~np.isnan(values)], values[~np.isnan(values)])
        assert np.isnan(back[2, 1])

    def test_metrics_roundtrip(self, tmp_path):
        path = tmp_path / "metrics.txt"
        fileio.write_metrics(path, {"a": 1.5, "b": "ok", "c": 3})
        back = fileio.read_metrics(path)
        assert back["a"] == "1.5"
        assert back["b"] == "ok"


class TestConfigValidation:
    def test_missing_mask_names_field(self):
        doc = tiny_scan_config()
        del doc["state"]["mask_a"]
        with pytest.raises(ConfigError, match="state.mask_a"):
            load_experiment(doc)

    def test_bad_visibility_names_field(self):
        doc = tiny_scan_config()
        doc["state"]["visibility"] = 1.4
        with pytest.raises(ConfigError, match="state.visibility"):
            load_experiment(doc)

    def test_bad_sign(self):
        doc = tiny_scan_config()
        doc["state"]["sign"] = 3
        with pytest.raises(ConfigError, match="state.sign"):
            load_experiment(doc)

    def test_bad_scan_angles(self):
        doc = tiny_scan_config()
        doc["scan"]["angles"] = 2
        with pytest.raises(ConfigError, match="scan.angles"):
            load_experiment(doc)

    def test_bad_detector_efficiency(self):
        doc = tiny_scan_config()
        doc["detector"] = {"efficiency": 0.0}
        with pytest.raises(ConfigError, match="detector.efficiency"):
            load_experiment(doc)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="kind"):
            load_experiment({"kind": "nope"})

    def test_sign_string_forms(self):
        doc = tiny_scan_config()
        doc["state"]["sign"] = "-"
        exp = load_experiment(doc)
        assert exp.state.sign == -1

    def test_presets_all_validate(self):
        for name in ("oam-scan", "oam-sweep", "patterned", "patterned-letter"):
            exp = load_experiment(preset_config(name))
            assert exp.kind in ("scan", "sweep", "patterned")


@pytest.fixture(scope="module")
def scan_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("scan-out")
    exp = load_experiment(tiny_scan_config())
    metrics = run_experiment(exp, out)
    return out, metrics


class TestRunnerArtifacts:
    def test_expected_files_exist(self, scan_out):
        out, _ = scan_out
        for name in ("manifest.yaml", "metrics.txt", "singles.pgm", "singles.csv",
                     "g2_map.csv", "G2_map.csv", "heralded_000.pgm",
                     "singles_profile.csv", "singles_unfolded.csv"):
            assert (out / name).exists(), name

    def test_metrics_content(self, scan_out):
        _, metrics = scan_out
        assert metrics["fringe_count"] == 4
        assert metrics["slope_sign"] == 1
        assert metrics["rmse_vs_analytic"] < 0.4

    def test_manifest_reruns_bit_identical(self, scan_out, tmp_path):
        out, _ = scan_out
        doc = fileio.read_yaml(out / "manifest.yaml")
        exp = load_experiment(doc)
        out2 = tmp_path / "rerun"
        run_experiment(exp, out2)
        for path in sorted(out.iterdir()):
            if path.suffix in (".pgm", ".csv"):
                assert (out2 / path.name).read_bytes() == path.read_bytes(), path.name

    def test_own_csv_accepted_by_reanalysis(self, scan_out, tmp_path):
        out, _ = scan_out
        rc = main([
            "analyze",
            "--image", str(out / "heralded_000.csv"),
            "--singles", str(out / "singles.csv"),
            "--bins", "36",
            "--out", str(tmp_path / "re"),
        ])
        assert rc == 0
        assert (tmp_path / "re" / "g2_profile.csv").exists()

    def test_map_reanalysis(self, scan_out, tmp_path):
        out, _ = scan_out
        rc = main(["analyze", "--map", str(out / "g2_map.csv"),
                   "--out", str(tmp_path / "remap")])
        assert rc == 0
        metrics = fileio.read_metrics(tmp_path / "remap" / "map_metrics.txt")
        assert metrics["fringe_count"] == "4"


class TestCli:
    def test_run_with_config_file(self, tmp_path):
        cfg = tiny_scan_config(seed=99)
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
        out = tmp_path / "out"
        rc = main(["run", "--config", str(path), "--out", str(out)])
        assert rc == 0
        assert (out / "manifest.yaml").exists()

    def test_run_rejects_bad_config_with_diagnostic(self, tmp_path, capsys):
        cfg = tiny_scan_config()
        cfg["state"]["visibility"] = -2
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
        rc = main(["run", "--config", str(path), "--out", str(tmp_path / "o")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "state.visibility" in err

    def test_seed_override_changes_artifacts(self, tmp_path):
        cfg = tiny_scan_config()
        path = tmp_path / "cfg.yaml"
        path.write_text(yaml.safe_dump(cfg), encoding="utf-8")
        main(["run", "--config", str(path), "--out", str(tmp_path / "a")])
        main(["run", "--config", str(path), "--out", str(tmp_path / "b"),
              "--seed", "123"])
        a = (tmp_path / "a" / "singles.pgm").read_bytes()
        b = (tmp_path / "b" / "singles.pgm").read_bytes()
        assert a != b

    def test_design_mask_cli(self, tmp_path):
        out = tmp_path / "design"
        rc = main(["design-mask", "--bitmap", "letter-n", "--out", str(out)])
        assert rc == 0
        assert (out / "mask_a.pgm").exists()
        assert (out / "mask_a_conjugate.pgm").exists()
        doc = fileio.read_yaml(out / "design.yaml")
        levels = doc["predicted_levels"]["0.000000"]
        assert levels["0.000000"] == pytest.approx(2.0)
        assert levels[f"{PI / 2:.6f}"] == pytest.approx(0.0)

    def test_design_mask_from_pgm(self, tmp_path):
        raster = (letter_n_raster(32) * 255).astype(np.int64)
        src = tmp_path / "letter.pgm"
        fileio.write_pgm(src, raster, maxval=255, flip=False)
        out = tmp_path / "design2"
        rc = main(["design-mask", "--bitmap", str(src), "--out", str(out)])
        assert rc == 0
        assert (out / "design.yaml").exists()

    def test_verify_single_fast_criterion(self, capsys):
        rc = main(["verify", "--criteria", "8"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "criterion 08 [PASS]" in out

    def test_analyze_requires_inputs(self, capsys):
        rc = main(["analyze", "--bins", "36"])
        assert rc == 2
        assert "analyze" in capsys.readouterr().err
