"""Synthetic fixture files written directly in the frozen formats."""

import numpy as np
import pytest


def fmt(x):
    return f"{x:.17g}"


def write_ball_trajectory(path, p=0.5, t_end=40.0, rows=300):
    """Closed-form round-solution trajectory in the exact CSV schema."""
    t = np.linspace(0.0, t_end, rows)
    R = (1.0 + (1.0 - p) * t) ** (1.0 / (1.0 - p))
    cols = ["t", "dt", "V", "s_min", "s_max", "ratio", "osc", "grad_sup",
            "S_min", "S_max", "K_min", "K_max", "lambda_min", "lambda_max",
            "kappa_min", "kappa_max", "H_max", "width_minus", "width_plus",
            "width_ratio", "centroid_1", "centroid_2", "dev_unit", "tso_min"]
    lines = [",".join(cols)]
    dt = np.gradient(t)
    for k in range(rows):
        row = [t[k], dt[k], np.pi * R[k] ** 2, R[k], R[k], 1.0, 0.0, 0.0,
               R[k], R[k], 1 / R[k], 1 / R[k], R[k], R[k], 1 / R[k], 1 / R[k],
               1 / R[k], 2 * R[k], 2 * R[k], 1.0, 0.0, 0.0, 0.0,
               0.5 * R[k] ** (p - 1.0)]
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_snapshot(path, support_fn, t, N=64):
    th = np.arange(N) * 2 * np.pi / N
    s = support_fn(th)
    lines = [f"2,{N},{fmt(t)}"]
    lines += [f"{fmt(a)},{fmt(v)}" for a, v in zip(th, s)]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def ball_csv(tmp_path):
    return write_ball_trajectory(tmp_path / "traj.csv")


@pytest.fixture
def snapshots(tmp_path):
    paths = []
    for k, (ab, t) in enumerate([((1.0, 1.5), 0.0), ((1.1, 1.5), 0.5),
                                 ((2.0, 2.02), 3.0)]):
        a, b = ab
        paths.append(write_snapshot(
            tmp_path / f"body_t{t:.6f}.csv",
            lambda th, a=a, b=b: np.sqrt(a ** 2 * np.cos(th) ** 2 + b ** 2 * np.sin(th) ** 2),
            t))
    return paths
