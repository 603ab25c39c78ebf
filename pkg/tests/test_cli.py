"""Config parsing, run/verify/report exit codes, determinism, snapshots."""

import filecmp

import numpy as np
import pytest

from gaussflow.cli import (EXIT_OK, EXIT_USAGE, ConfigError,
                           build_body, cmd_report, cmd_run, load_run_config, main,
                           parse_config_text, parse_phi)
from gaussflow.convex import load_snapshot
from gaussflow.diagnostics import csv_columns, read_trajectory, record_body
from gaussflow.sphere import build_grid

BASE_CFG = """\
# expanding run from a unit disk
n = 2
p = 0.5
direction = expanding_primal
phi = const 1
body = ball 1.0
resolution = 64
t_end = 1.0          # horizon
record_every = 5
snapshot_every = 0
seed = 3
"""


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigParsing:
    def test_key_value_lines(self):
        out = parse_config_text("a = 1\n# comment\nb = two words  # trailing\n")
        assert out == {"a": "1", "b": "two words"}

    def test_rejects_garbage(self):
        with pytest.raises(ConfigError):
            parse_config_text("just some text\n")

    def test_rejects_duplicates(self):
        with pytest.raises(ConfigError):
            parse_config_text("a = 1\na = 2\n")

    def test_load_full_config(self, tmp_path):
        cfg, grid, body, raw = load_run_config(write_cfg(tmp_path, BASE_CFG))
        assert cfg.p == 0.5 and grid.resolution == (64,)
        assert abs(body.volume - np.pi) < 1e-10

    def test_missing_key(self, tmp_path):
        with pytest.raises(ConfigError):
            load_run_config(write_cfg(tmp_path, "n = 2\np = 0.5\n"))

    def test_nonconvex_body_rejected(self, tmp_path):
        text = BASE_CFG.replace("body = ball 1.0", "body = harmonic 1.0 2:0.9")
        with pytest.raises(ConfigError):
            load_run_config(write_cfg(tmp_path, text))

    def test_bodies(self):
        g = build_grid(2, 64)
        assert abs(build_body(g, "ball 2").volume - 4 * np.pi) < 1e-9
        assert abs(build_body(g, "ellipsoid 1 2").volume - 2 * np.pi) < 1e-9
        b = build_body(g, "translated_ball 1 0.2 0.1")
        assert np.abs(b.centroid - [0.2, 0.1]).max() < 1e-8
        h = build_body(g, "harmonic 1.0 2:0.05 3:0.02")
        assert h.radii.lam_min > 0
        with pytest.raises(ConfigError):
            build_body(g, "cube 1")

    def test_phi_families(self):
        assert parse_phi("const 2", 2).infimum() == 2.0
        assert abs(parse_phi("dipole 0.1 0.2", 2).infimum() - (1 - np.hypot(0.1, 0.2))) < 1e-15
        assert parse_phi("quadrupole 0.3 1", 3).infimum() > 0
        with pytest.raises(ConfigError):
            parse_phi("fancy 1", 2)


class TestCmdRun:
    def test_outputs_and_exit(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE_CFG)
        out = tmp_path / "out"
        assert cmd_run(cfg, str(out)) == EXIT_OK
        assert (out / "trajectory.csv").exists()
        assert (out / "run_meta").exists()
        snaps = sorted(out.glob("body_t*.csv"))
        assert len(snaps) == 2  # initial and final

    def test_final_volume_matches_ball_formula(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE_CFG)
        out = tmp_path / "out"
        cmd_run(cfg, str(out))
        tr = read_trajectory(out / "trajectory.csv")
        # R(1) = (1 + 0.5)^2 = 2.25 for p = 1/2
        assert abs(tr.col("V")[-1] - np.pi * 2.25 ** 2) < 1e-8

    def test_malformed_config_exit2_no_outputs(self, tmp_path):
        bad = write_cfg(tmp_path, "nonsense without equals\n")
        out = tmp_path / "out_bad"
        assert cmd_run(bad, str(out)) == EXIT_USAGE
        assert not out.exists()

    def test_shrinking_halts_by_extinction(self, tmp_path):
        text = BASE_CFG.replace("direction = expanding_primal",
                                "direction = shrinking_primal")
        text = text.replace("t_end = 1.0          # horizon", "v_stop = 1e-4")
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out_shrink"
        assert cmd_run(cfg, str(out)) == EXIT_OK
        meta = (out / "run_meta").read_text()
        assert "halted = extinction" in meta
        final_t = float([ln.split("=")[1] for ln in meta.splitlines()
                         if ln.startswith("final_t")][0])
        assert final_t < 2.0 / 3.0  # extinction time of the unit disk at p=1/2

    def test_determinism_byte_identical(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE_CFG)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        cmd_run(cfg, str(out1))
        cmd_run(cfg, str(out2))
        assert filecmp.cmp(out1 / "trajectory.csv", out2 / "trajectory.csv",
                           shallow=False)

    def test_snapshot_reproduces_csv_row(self, tmp_path):
        cfg_path = write_cfg(tmp_path, BASE_CFG)
        out = tmp_path / "out_snap"
        cmd_run(cfg_path, str(out))
        tr = read_trajectory(out / "trajectory.csv")
        body, t = load_snapshot(sorted(out.glob("body_t*.csv"))[-1])
        k = int(np.argmin(np.abs(tr.col("t") - t)))
        cfg, grid, _, _ = load_run_config(cfg_path)
        rec = record_body(body, t, 0.0, cfg)
        row = rec.row()
        cols = csv_columns(2)
        for name, val in zip(cols, row):
            if name == "dt":
                continue  # dt is trajectory state, not body state
            assert abs(tr.col(name)[k] - val) <= 1e-12 * max(1.0, abs(val)), name

    def test_dual_direction_runs(self, tmp_path):
        text = BASE_CFG.replace("direction = expanding_primal",
                                "direction = expanding_dual")
        text = text.replace("t_end = 1.0          # horizon", "t_end = 0.3")
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out_dual"
        assert cmd_run(cfg, str(out)) == EXIT_OK
        tr = read_trajectory(out / "trajectory.csv")
        assert tr.col("V")[-1] < tr.col("V")[0]  # dual body shrinks

    def test_radial_direction_runs(self, tmp_path):
        text = BASE_CFG.replace("direction = expanding_primal",
                                "direction = expanding_radial")
        text = text.replace("t_end = 1.0          # horizon", "t_end = 0.3")
        text = text.replace("record_every = 5", "record_every = 25")
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "out_rad"
        assert cmd_run(cfg, str(out)) == EXIT_OK
        tr = read_trajectory(out / "trajectory.csv")
        # diagnostics describe the primal body, which expands like the ball
        assert abs(tr.col("s_min")[-1] - (1 + 0.5 * 0.3) ** 2) < 1e-6


class TestCmdVerifyAndReport:
    def test_unknown_suite(self):
        assert main(["verify", "no-such-suite"]) == EXIT_USAGE

    def test_g_properties_suite(self):
        assert main(["verify", "g-properties", "--p", "0.5", "--trials", "200",
                     "--seed", "7"]) == EXIT_OK

    def test_ball_exact_small(self):
        assert main(["verify", "ball-exact", "--n", "2", "--p", "0.5",
                     "--resolution", "64", "--tol", "1e-8"]) == EXIT_OK

    def test_report_on_run(self, tmp_path):
        cfg = write_cfg(tmp_path, BASE_CFG)
        out = tmp_path / "out"
        cmd_run(cfg, str(out))
        assert cmd_report(str(out / "trajectory.csv")) == EXIT_OK

    def test_report_missing_column_exit2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,dt,V\n0,0,1\n")
        assert cmd_report(str(bad)) == EXIT_USAGE

    def test_report_missing_file_exit2(self, tmp_path):
        assert cmd_report(str(tmp_path / "nope.csv")) == EXIT_USAGE
