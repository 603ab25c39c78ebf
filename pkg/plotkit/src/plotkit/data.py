"""Readers for the frozen simulator file formats.

plotkit deliberately re-implements the parsing instead of importing the
simulator: the CSV/snapshot layouts are the contract between the two
packages.

Trajectory CSV: header row, comma-separated, 17-significant-digit decimals,
LF endings, column order
    t, dt, V, s_min, s_max, ratio, osc, grad_sup, S_min, S_max, K_min,
    K_max, lambda_min, lambda_max, kappa_min, kappa_max, H_max,
    width_minus, width_plus, width_ratio, centroid_1..centroid_n,
    dev_unit, tso_min

Snapshot: header `n,N...,t`, then one `coords...,s` line per node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LEAD = ["t", "dt", "V", "s_min", "s_max", "ratio", "osc", "grad_sup",
         "S_min", "S_max", "K_min", "K_max", "lambda_min", "lambda_max",
         "kappa_min", "kappa_max", "H_max", "width_minus", "width_plus",
         "width_ratio"]
_TAIL = ["dev_unit", "tso_min"]


class DataFormatError(ValueError):
    pass


def expected_columns(n):
    return _LEAD + [f"centroid_{i + 1}" for i in range(n)] + _TAIL


@dataclass
class TrajectoryData:
    columns: list
    table: np.ndarray  # rows x columns
    n: int

    def col(self, name):
        if name not in self.columns:
            raise DataFormatError(f"trajectory has no column {name!r}")
        return self.table[:, self.columns.index(name)]


def read_trajectory(path) -> TrajectoryData:
    try:
        with open(path) as fh:
            header = fh.readline().strip()
            rows = [ln.strip().split(",") for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    cols = header.split(",")
    n = sum(1 for c in cols if c.startswith("centroid_"))
    if n not in (2, 3) or cols != expected_columns(n):
        raise DataFormatError(f"unexpected trajectory header in {path}")
    if not rows:
        raise DataFormatError(f"no data rows in {path}")
    if any(len(r) != len(cols) for r in rows):
        raise DataFormatError(f"ragged rows in {path}")
    return TrajectoryData(cols, np.array(rows, dtype=float), n)


@dataclass
class Snapshot:
    n: int
    resolution: tuple
    t: float
    coords: np.ndarray   # nodes x (n-1)
    support: np.ndarray  # nodes

    def outline(self, normalize=False):
        """Closed boundary polyline of an S^1 snapshot (m+1 x 2 array).

        The boundary point with outward normal angle th is
        (s cos th - s' sin th, s sin th + s' cos th); s' comes from spectral
        differentiation of the (uniformly sampled, periodic) support values.
        With normalize=True the curve is scaled to enclose area pi.
        """
        if self.n != 2:
            raise DataFormatError("outlines are defined for planar snapshots only")
        th = self.coords[:, 0]
        s = self.support
        k = np.arange(len(s) // 2 + 1)
        F = np.fft.rfft(s) * (1j * k)
        F[-1] = 0.0
        ds = np.fft.irfft(F, n=len(s))
        x = s * np.cos(th) - ds * np.sin(th)
        y = s * np.sin(th) + ds * np.cos(th)
        pts = np.column_stack([x, y])
        if normalize:
            xx, yy = pts[:, 0], pts[:, 1]
            area = 0.5 * np.abs(np.dot(xx, np.roll(yy, -1)) - np.dot(yy, np.roll(xx, -1)))
            pts = pts * np.sqrt(np.pi / area)
        return np.vstack([pts, pts[:1]])


def read_snapshot(path) -> Snapshot:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    head = lines[0].split(",")
    try:
        n = int(head[0])
        res = tuple(int(x) for x in head[1:-1])
        t = float(head[-1])
    except ValueError as exc:
        raise DataFormatError(f"bad snapshot header in {path}") from exc
    if n not in (2, 3) or len(res) != n - 1:
        raise DataFormatError(f"bad snapshot header in {path}")
    body = np.array([ln.split(",") for ln in lines[1:]], dtype=float)
    if body.shape[0] != int(np.prod(res)) or body.shape[1] != n:
        raise DataFormatError(f"snapshot node table has wrong shape in {path}")
    return Snapshot(n, res, t, body[:, :-1], body[:, -1])
