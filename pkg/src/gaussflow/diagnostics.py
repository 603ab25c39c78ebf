"""Trajectory diagnostics: per-state records, CSV schema, bound reports.

Each accepted state condenses to one DiagnosticsRecord row.  The bound
checks are pure functions of the record table so they can be re-run offline
on a saved trajectory.csv.  Checks come in two tiers: hard assertions for
sign/ordering facts, and PASS/FAIL with measured constants for the
C-dependent inequalities (whose constants are not explicit a priori).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex import ConvexBody, support_to_radial
from .flow import UNIT_BALL_VOLUME, FlowState
from .sphere import covariant_gradient_normsq

_BASE_COLUMNS = ["t", "dt", "V", "s_min", "s_max", "ratio", "osc", "grad_sup",
                 "S_min", "S_max", "K_min", "K_max", "lambda_min", "lambda_max",
                 "kappa_min", "kappa_max", "H_max",
                 "width_minus", "width_plus", "width_ratio"]
_TAIL_COLUMNS = ["dev_unit", "tso_min"]


def csv_columns(n):
    return _BASE_COLUMNS + [f"centroid_{i + 1}" for i in range(n)] + _TAIL_COLUMNS


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    V: float
    s_min: float
    s_max: float
    ratio: float
    osc: float
    grad_sup: float
    S_min: float
    S_max: float
    K_min: float
    K_max: float
    lambda_min: float
    lambda_max: float
    kappa_min: float
    kappa_max: float
    H_max: float
    width_minus: float
    width_plus: float
    width_ratio: float
    centroid: np.ndarray
    dev_unit: float
    tso_min: float

    def row(self):
        head = [self.t, self.dt, self.V, self.s_min, self.s_max, self.ratio,
                self.osc, self.grad_sup, self.S_min, self.S_max, self.K_min,
                self.K_max, self.lambda_min, self.lambda_max, self.kappa_min,
                self.kappa_max, self.H_max, self.width_minus, self.width_plus,
                self.width_ratio]
        return head + list(self.centroid) + [self.dev_unit, self.tso_min]


def record_body(body: ConvexBody, t, dt, cfg) -> DiagnosticsRecord:
    """All tracked scalars of one body (cfg supplies p and Phi for the Tso term)."""
    n = body.grid.ambient_dim
    s = body.support.values
    radii = body.radii
    det = radii.det
    lam_min, lam_max = radii.lam_min, radii.lam_max
    gradsq = covariant_gradient_normsq(body.support)
    scale = (UNIT_BALL_VOLUME[n] / body.volume) ** (1.0 / n)
    r_plus = body.s_max
    tso = cfg.phi(body.grid.nodes) * det ** cfg.beta / (2.0 * r_plus - s)
    rec = DiagnosticsRecord(
        t=float(t), dt=float(dt), V=body.volume,
        s_min=body.s_min, s_max=body.s_max,
        ratio=body.s_max / body.s_min,
        osc=body.s_max - body.s_min,
        grad_sup=float(np.sqrt(gradsq.max())),
        S_min=float(det.min()), S_max=float(det.max()),
        K_min=float(1.0 / det.max()), K_max=float(1.0 / det.min()),
        lambda_min=lam_min, lambda_max=lam_max,
        kappa_min=1.0 / lam_max, kappa_max=1.0 / lam_min,
        H_max=float(radii.mean_curv.max()),
        width_minus=body.width_minus, width_plus=body.width_plus,
        width_ratio=body.width_plus / body.width_minus,
        centroid=np.array(body.centroid, dtype=float),
        dev_unit=float(np.abs(scale * s - 1.0).max()),
        tso_min=float(tso.min()),
    )
    assert rec.ratio >= 1.0 and rec.K_min <= rec.K_max
    # extrema consistency: det <= lam_max^{n-1} and det >= lam_min^{n-1}
    nm1 = n - 1
    assert rec.kappa_min * rec.S_max ** (1.0 / nm1) <= 1.0 + 1e-12
    assert rec.kappa_max * rec.S_min ** (1.0 / nm1) >= 1.0 - 1e-12
    assert np.isfinite(rec.row()).all()
    return rec


def record(state: FlowState, cfg) -> DiagnosticsRecord:
    return record_body(state.body, state.t, state.dt_last, cfg)


def minkowski_inclusion_defect(body: ConvexBody):
    """Violation of (w_-/(n+1)) B <= K - b <= (n w_+/(n+1)) B, node-wise.

    Returns (outer, inner): positive parts of max s_rec - n*w_+/(n+1) and
    w_-/(n+1) - min r_rec for the centroid-recentered body; both should be
    <= interpolation noise for any convex body.
    """
    n = body.grid.ambient_dim
    recentered = body.translated(-body.centroid)
    outer = recentered.s_max - n * body.width_plus / (n + 1.0)
    r = support_to_radial(recentered.support)
    inner = body.width_minus / (n + 1.0) - float(r.values.min())
    return outer, inner


# --------------------------------------------------------------------------
# CSV round trip
# --------------------------------------------------------------------------

class TrajectoryFormatError(ValueError):
    pass


def _fmt(x):
    return f"{x:.17g}"


class TrajectoryWriter:
    """Streams DiagnosticsRecords to CSV (17 significant digits, LF endings)."""

    def __init__(self, path, n):
        self.columns = csv_columns(n)
        self._fh = open(path, "w", newline="\n")
        self._fh.write(",".join(self.columns) + "\n")

    def write(self, rec: DiagnosticsRecord):
        self._fh.write(",".join(_fmt(v) for v in rec.row()) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class Trajectory:
    """Column view of a trajectory CSV."""

    def __init__(self, columns, data):
        self.columns = columns
        self._data = data
        cents = [c for c in columns if c.startswith("centroid_")]
        self.n = len(cents)

    def __len__(self):
        return len(self._data["t"])

    def col(self, name):
        if name not in self._data:
            raise TrajectoryFormatError(f"missing column {name!r}")
        return self._data[name]

    @property
    def expanding(self):
        v = self.col("V")
        return v[-1] >= v[0]


def read_trajectory(path) -> Trajectory:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise TrajectoryFormatError("empty trajectory file")
        cols = header.split(",")
        n_guess = sum(1 for c in cols if c.startswith("centroid_"))
        expected = csv_columns(n_guess) if n_guess in (2, 3) else None
        if expected is None or cols != expected:
            missing = [c for c in csv_columns(n_guess or 2) if c not in cols]
            raise TrajectoryFormatError(
                f"bad trajectory header; missing/misordered columns: {missing or cols}")
        rows = [ln.strip().split(",") for ln in fh if ln.strip()]
    if not rows:
        raise TrajectoryFormatError("trajectory has no data rows")
    if any(len(r) != len(cols) for r in rows):
        raise TrajectoryFormatError("row length does not match header")
    arr = np.array(rows, dtype=float)
    return Trajectory(cols, {c: arr[:, k] for k, c in enumerate(cols)})


# --------------------------------------------------------------------------
# bound reports
# --------------------------------------------------------------------------

@dataclass
class Report:
    name: str
    passed: bool
    summary: str
    metrics: dict

    def __str__(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.summary}"


def check_gradient_bound(tr: Trajectory, growth_target=None, slack=0.05) -> Report:
    """Uniform gradient/oscillation bound along an expanding run.

    sup_t grad and sup_t osc must not exceed their initial values by more
    than the slack factor; when growth_target is given, s_min must also have
    grown by that factor for the run to count.
    """
    t = tr.col("t")
    grad = tr.col("grad_sup")
    osc = tr.col("osc")
    s_min = tr.col("s_min")
    tiny = 1e-9 * tr.col("s_max")[0]
    grad_cap = grad[0] * (1.0 + slack) + tiny
    osc_cap = osc[0] * (1.0 + slack) + tiny
    growth = s_min[-1] / s_min[0]
    ok = grad.max() <= grad_cap and osc.max() <= osc_cap and \
        (growth_target is None or growth >= growth_target)
    return Report(
        "gradient_bound", bool(ok),
        f"sup grad {grad.max():.3e} (cap {grad_cap:.3e}) at t={t[grad.argmax()]:.4g}; "
        f"sup osc {osc.max():.3e} (cap {osc_cap:.3e}); s_min growth {growth:.3g}x",
        {"grad_sup": float(grad.max()), "grad_cap": float(grad_cap),
         "osc_sup": float(osc.max()), "osc_cap": float(osc_cap),
         "t_at_max": float(t[grad.argmax()]), "growth": float(growth)})


def check_ratio_convergence(tr: Trajectory, tol_ratio=0.01, growth_target=None) -> Report:
    """max s / min s approaches 1 and is eventually non-increasing."""
    t = tr.col("t")
    ratio = tr.col("ratio")
    s_min = tr.col("s_min")
    last = t >= t[-1] / 10.0
    monotone_tail = bool((ratio[-1] <= ratio[last] + 1e-10).all())
    growth = s_min[-1] / s_min[0]
    ok = ratio[-1] - 1.0 <= tol_ratio and monotone_tail and \
        (growth_target is None or growth >= growth_target)
    return Report(
        "ratio_convergence", bool(ok),
        f"ratio(end)-1 = {ratio[-1] - 1.0:.3e} (tol {tol_ratio:g}); "
        f"tail monotone: {monotone_tail}; s_min growth {growth:.3g}x",
        {"ratio_end": float(ratio[-1]), "monotone_tail": monotone_tail,
         "growth": float(growth)})


def burn_in_time(tr: Trajectory, dev_threshold=0.2):
    """First time the rescaled body is within dev_threshold of the unit ball."""
    dev = tr.col("dev_unit")
    idx = np.nonzero(dev < dev_threshold)[0]
    return float(tr.col("t")[idx[0]]) if len(idx) else None


def check_curvature_bounds(tr: Trajectory, p, band=4.0, t_kappa_cap=10.0,
                           decay_cap=20.0, dev_threshold=0.2) -> Report:
    """Curvature pinching of the rescaled flow plus raw power-law bounds.

    After burn-in (dev_unit < dev_threshold) the rescaled principal
    curvatures must lie in [1/band, band]; on the raw trajectory t*kappa_max
    and K_max * t^{-(n-1)/(p-1)} must stay bounded.
    """
    n = tr.n
    t = tr.col("t")
    tb = burn_in_time(tr, dev_threshold)
    if tb is None:
        return Report("curvature_bounds", False,
                      f"burn-in never reached (dev_unit stays >= {dev_threshold})", {})
    sel = t >= tb
    vol_scale = (tr.col("V")[sel] / UNIT_BALL_VOLUME[n]) ** (1.0 / n)
    kap_max_resc = tr.col("kappa_max")[sel] * vol_scale
    kap_min_resc = tr.col("kappa_min")[sel] * vol_scale
    in_band = kap_max_resc.max() <= band and kap_min_resc.min() >= 1.0 / band
    t_kappa = (t[sel] * tr.col("kappa_max")[sel]).max()
    expo = (n - 1.0) / (p - 1.0)
    decay = (tr.col("K_max")[sel] * t[sel] ** (-expo)).max()
    ok = in_band and t_kappa <= t_kappa_cap and decay <= decay_cap
    return Report(
        "curvature_bounds", bool(ok),
        f"burn-in t={tb:.4g}; rescaled kappa in [{kap_min_resc.min():.3g}, "
        f"{kap_max_resc.max():.3g}] (band {band:g}); sup t*kappa_max {t_kappa:.3g}; "
        f"sup K_max*t^{-expo:.3g} = {decay:.3g}",
        {"burn_in": tb, "kappa_resc_min": float(kap_min_resc.min()),
         "kappa_resc_max": float(kap_max_resc.max()),
         "t_kappa_sup": float(t_kappa), "decay_sup": float(decay)})


def check_width_ratio(tr: Trajectory, slack=1.1) -> Report:
    """Width-ratio boundedness along a shrinking run."""
    wr = tr.col("width_ratio")
    cap = wr[0] * slack
    ok = wr.max() <= cap
    return Report(
        "width_ratio", bool(ok),
        f"sup width ratio {wr.max():.4g} (cap {cap:.4g}, initial {wr[0]:.4g})",
        {"width_ratio_sup": float(wr.max()), "cap": float(cap)})


def check_unit_ball_convergence(tr: Trajectory, tol0=0.02, tol2=0.05) -> Report:
    """C^0 and C^2 proximity of the final rescaled body to the unit ball."""
    n = tr.n
    scale = (UNIT_BALL_VOLUME[n] / tr.col("V")[-1]) ** (1.0 / n)
    lam_dev = max(abs(scale * tr.col("lambda_max")[-1] - 1.0),
                  abs(scale * tr.col("lambda_min")[-1] - 1.0))
    dev0 = tr.col("dev_unit")[-1]
    ok = dev0 <= tol0 and lam_dev <= tol2
    return Report(
        "unit_ball_convergence", bool(ok),
        f"dev_unit(end) {dev0:.3e} (tol {tol0:g}); radii deviation {lam_dev:.3e} (tol {tol2:g})",
        {"dev_unit": float(dev0), "lambda_dev": float(lam_dev)})
