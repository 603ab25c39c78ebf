"""The three figure kinds: timeseries, bound-check, body outlines."""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import DataFormatError, read_snapshot, read_trajectory

KINDS = ("timeseries", "bound-check", "outlines")


@dataclass
class PlotSpec:
    kind: str
    inputs: list            # CSV path(s) for series kinds, snapshot paths for outlines
    out: str
    columns: list = field(default_factory=list)   # timeseries quantities
    quantity: str = "kappa_max"                   # bound-check quantity
    alpha: float = -1.0                           # reference exponent
    logx: bool = False
    logy: bool = False
    normalize: bool = True                        # outlines to unit area
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataFormatError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise DataFormatError("no input files given")


def _finish(fig, ax, spec):
    if spec.title:
        ax.set_title(spec.title)
    fig.savefig(spec.out, dpi=130)
    plt.close(fig)
    return spec.out


def plot_timeseries(spec: PlotSpec):
    cols = spec.columns or ["ratio"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for path in spec.inputs:
        tr = read_trajectory(path)
        label_prefix = f"{path}: " if len(spec.inputs) > 1 else ""
        for c in cols:
            ax.plot(tr.col("t"), tr.col(c), label=label_prefix + c)
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    return _finish(fig, ax, spec)


def fit_envelope(t, q, alpha):
    """Envelope constant C with q <= C t^alpha, calibrated on the last decade.

    If an early transient pokes above the tail-calibrated envelope, C is
    raised to the global max so the plotted reference encloses the whole run.
    """
    good = t > 0
    window = good & (t >= t[-1] / 10.0)
    c_tail = float((q[window] * t[window] ** (-alpha)).max())
    c_all = float((q[good] * t[good] ** (-alpha)).max())
    return max(c_tail, c_all)


def plot_bound_check(spec: PlotSpec):
    tr = read_trajectory(spec.inputs[0])
    t, q = tr.col("t"), tr.col(spec.quantity)
    pos = t > 0
    C = fit_envelope(t, q, spec.alpha)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(t[pos], q[pos], label=spec.quantity)
    ax.loglog(t[pos], C * t[pos] ** spec.alpha, "--",
              label=f"C t^{spec.alpha:g}, C = {C:.4g}")
    ax.set_xlabel("t")
    ax.legend(loc="best")
    ax.grid(True, which="both", alpha=0.3)
    fig.text(0.5, 0.01,
             f"reference envelope C t^{spec.alpha:g} with fitted C = {C:.6g}",
             ha="center", fontsize=8)
    return _finish(fig, ax, spec)


def plot_outlines(spec: PlotSpec):
    snaps = sorted((read_snapshot(p) for p in spec.inputs), key=lambda s: s.t)
    fig, ax = plt.subplots(figsize=(5.2, 5.2))
    cmap = plt.get_cmap("viridis")
    for i, snap in enumerate(snaps):
        pts = snap.outline(normalize=spec.normalize)
        shade = cmap(i / max(len(snaps) - 1, 1))
        ax.plot(pts[:, 0], pts[:, 1], color=shade, lw=1.2, label=f"t = {snap.t:.3g}")
    if spec.normalize:
        ang = np.linspace(0, 2 * np.pi, 256)
        ax.plot(np.cos(ang), np.sin(ang), "k:", lw=0.8, label="unit circle")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=7)
    ax.grid(True, alpha=0.3)
    return _finish(fig, ax, spec)


def plot(spec: PlotSpec):
    """Render the figure described by spec; returns the output path."""
    if spec.kind == "timeseries":
        return plot_timeseries(spec)
    if spec.kind == "bound-check":
        return plot_bound_check(spec)
    return plot_outlines(spec)
