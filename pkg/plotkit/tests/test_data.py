import numpy as np
import pytest

from plotkit.data import DataFormatError, read_snapshot, read_trajectory

from conftest import write_snapshot


class TestTrajectory:
    def test_read(self, ball_csv):
        tr = read_trajectory(ball_csv)
        assert tr.n == 2
        assert tr.col("t")[0] == 0.0
        assert abs(tr.col("V")[0] - np.pi) < 1e-14

    def test_missing_column(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("t,dt,V\n0,0,1\n")
        with pytest.raises(DataFormatError):
            read_trajectory(bad)

    def test_unknown_column_lookup(self, ball_csv):
        tr = read_trajectory(ball_csv)
        with pytest.raises(DataFormatError):
            tr.col("no_such_thing")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError):
            read_trajectory(tmp_path / "nope.csv")


class TestSnapshot:
    def test_read_and_outline_ball(self, tmp_path):
        path = write_snapshot(tmp_path / "b.csv", lambda th: np.full_like(th, 2.0), 1.5)
        snap = read_snapshot(path)
        assert snap.t == 1.5 and snap.resolution == (64,)
        pts = snap.outline()
        r = np.hypot(pts[:, 0], pts[:, 1])
        assert np.abs(r - 2.0).max() < 1e-12

    def test_normalized_outline_unit_area(self, tmp_path):
        path = write_snapshot(
            tmp_path / "e.csv",
            lambda th: np.sqrt(np.cos(th) ** 2 + 4 * np.sin(th) ** 2), 0.0)
        pts = read_snapshot(path).outline(normalize=True)[:-1]
        x, y = pts[:, 0], pts[:, 1]
        area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        assert abs(area - np.pi) < 1e-10

    def test_outline_matches_ellipse(self, tmp_path):
        # boundary of the support-sampled ellipse is the parametric ellipse
        a, b = 1.0, 1.5
        path = write_snapshot(
            tmp_path / "e.csv",
            lambda th: np.sqrt(a ** 2 * np.cos(th) ** 2 + b ** 2 * np.sin(th) ** 2), 0.0,
            N=256)
        pts = read_snapshot(path).outline()[:-1]
        resid = (pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2 - 1.0
        assert np.abs(resid).max() < 1e-10

    def test_bad_header(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("7,64,0.0\n")
        with pytest.raises(DataFormatError):
            read_snapshot(bad)

    def test_wrong_node_count(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("2,64,0.0\n0,1\n0.1,1\n")
        with pytest.raises(DataFormatError):
            read_snapshot(bad)
