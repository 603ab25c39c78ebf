"""Command-line front end: run flows, verify invariants, report on CSVs.

Exit codes are frozen for CI use: 0 success (including extinction halts),
2 usage/config errors, 3 numerical failures.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .convex import (AnisotropyPhi, ConvexBody, InterpolationFailure,
                     NonConvexError, kaltenbach_check, polar_dual, save_snapshot,
                     speed_G)
from .diagnostics import (TrajectoryFormatError, TrajectoryWriter,
                          check_curvature_bounds, check_gradient_bound,
                          check_ratio_convergence, check_unit_ball_convergence,
                          check_width_ratio, minkowski_inclusion_defect, record,
                          record_body, read_trajectory)
from .flow import (EXPANDING_DUAL, EXPANDING_PRIMAL, EXPANDING_RADIAL,
                   SHRINKING_PRIMAL, Extinction, FlowConfig, StepRejected,
                   ball_envelope_radius, cross_check_dual, evolve, initial_state,
                   verify_rescaling_property)
from .sphere import ConfigurationError, build_grid
from . import shapes

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# run configuration file (line oriented `key = value`)
# --------------------------------------------------------------------------

_REQUIRED_KEYS = ("n", "p", "direction", "body", "resolution")


def parse_config_text(text):
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key or not val:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def _floats(text):
    return [float(tok) for tok in text.split()]


def build_body(grid, spec_text):
    """Initial body from a config value like 'ellipsoid 1 1.5'."""
    toks = spec_text.split()
    family, args = toks[0], toks[1:]
    if family == "ball":
        return ConvexBody(shapes.ball_support(grid, float(args[0])))
    if family == "translated_ball":
        return ConvexBody(shapes.translated_ball_support(
            grid, float(args[0]), [float(a) for a in args[1:]]))
    if family == "ellipsoid":
        return ConvexBody(shapes.ellipsoid_support(grid, [float(a) for a in args]))
    if family == "harmonic":
        base = float(args[0])
        modes = []
        for tok in args[1:]:
            parts = tok.split(":")
            if grid.ambient_dim == 2:
                modes.append((int(parts[0]), float(parts[1])))
            else:
                modes.append((int(parts[0]), int(parts[1]), float(parts[2])))
        return ConvexBody(shapes.harmonic_support(grid, base, modes))
    raise ConfigError(f"unknown body family {family!r}")


def parse_phi(text, n):
    toks = text.split()
    family = toks[0]
    if family == "const":
        return AnisotropyPhi.constant(float(toks[1]) if len(toks) > 1 else 1.0, n)
    if family == "dipole":
        return AnisotropyPhi.dipole([float(t) for t in toks[1:]], n)
    if family == "quadrupole":
        return AnisotropyPhi.quadrupole(float(toks[1]), int(toks[2]), n)
    raise ConfigError(f"unknown anisotropy family {family!r}")


def load_run_config(path):
    """Read and validate a run config; returns (FlowConfig, grid, body, raw dict)."""
    try:
        with open(path) as fh:
            raw = parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    try:
        n = int(raw["n"])
        resolution = tuple(int(x) for x in raw["resolution"].split())
        grid = build_grid(n, resolution)
        phi = parse_phi(raw.get("phi", "const 1"), n)
        direction = raw["direction"]
        cfg = FlowConfig(
            n=n, p=float(raw["p"]), direction=direction, phi=phi,
            t_end=float(raw["t_end"]) if "t_end" in raw else None,
            dt_safety=float(raw.get("dt_safety", 0.2)),
            v_stop=float(raw["v_stop"]) if "v_stop" in raw else None,
            resolution=resolution,
            record_every=int(raw.get("record_every", 1)),
            snapshot_every=int(raw.get("snapshot_every", 0)),
        )
        body = build_body(grid, raw["body"])
        if cfg.direction != SHRINKING_PRIMAL and cfg.t_end is None:
            raise ConfigError("t_end is required for non-shrinking runs")
    except (ValueError, ConfigurationError, NonConvexError, IndexError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    raw.setdefault("seed", "0")
    return cfg, grid, body, raw


# --------------------------------------------------------------------------
# run
# --------------------------------------------------------------------------

def cmd_run(config_path, out_dir):
    try:
        cfg, grid, body, raw = load_run_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(out_dir, exist_ok=True)

    if cfg.direction in (EXPANDING_DUAL, EXPANDING_RADIAL):
        start = polar_dual(body)
        values = start.support.values if cfg.direction == EXPANDING_DUAL \
            else 1.0 / start.support.values
    else:
        values = body.support.values

    state = initial_state(cfg, grid, values)
    writer = TrajectoryWriter(os.path.join(out_dir, "trajectory.csv"), cfg.n)

    def monitored_body(st):
        # radial runs evolve r but diagnostics describe the primal body
        return polar_dual(st.body) if cfg.direction == EXPANDING_RADIAL else st.body

    def snap(st):
        b = monitored_body(st)
        save_snapshot(b, st.t, os.path.join(out_dir, f"body_t{st.t:.6f}.csv"))

    last_written = [0]

    def on_accept(st):
        if cfg.record_every and st.step_count % cfg.record_every == 0:
            writer.write(record_of(st))
            last_written[0] = st.step_count
        if cfg.snapshot_every and st.step_count % cfg.snapshot_every == 0:
            snap(st)

    def record_of(st):
        return record_body(monitored_body(st), st.t, st.dt_last, cfg)

    status = EXIT_OK
    halted = ""
    writer.write(record_of(state))
    snap(state)
    final = state
    try:
        final = evolve(state, cfg, on_accept=on_accept)
    except Extinction as ext:
        final = ext.state
        halted = "extinction"
    except (StepRejected, NonConvexError, InterpolationFailure) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        status = EXIT_NUMERICAL
    if status == EXIT_OK:
        if final.step_count != last_written[0]:
            writer.write(record_of(final))
        snap(final)
    writer.close()

    with open(os.path.join(out_dir, "run_meta"), "w", newline="\n") as fh:
        for key in sorted(raw):
            fh.write(f"{key} = {raw[key]}\n")
        fh.write(f"grid = {grid}\n")
        fh.write(f"gaussflow_version = {__version__}\n")
        fh.write(f"numpy_version = {np.__version__}\n")
        fh.write(f"final_t = {final.t:.17g}\n")
        fh.write(f"steps = {final.step_count}\n")
        if halted:
            fh.write(f"halted = {halted}\n")
    if status == EXIT_OK:
        print(f"done: t = {final.t:.9g}, steps = {final.step_count}"
              + (f" ({halted})" if halted else ""))
    return status


# --------------------------------------------------------------------------
# verify suites
# --------------------------------------------------------------------------

def _print_check(name, value, tol, mode="max"):
    ok = value <= tol
    print(f"  {'PASS' if ok else 'FAIL'}  {name}: {value:.3e} (tol {tol:.3e})")
    return ok


def verify_ball_exact(n, p, resolution, tol=None):
    """Round solution against the closed-form radius."""
    grid = build_grid(n, resolution)
    cfg = FlowConfig(n=n, p=p, direction=EXPANDING_PRIMAL, t_end=5.0,
                     resolution=grid.resolution)
    body = ConvexBody(shapes.ball_support(grid, 1.0))
    worst = 0.0

    def on_accept(st):
        nonlocal worst
        worst = max(worst, float(np.abs(st.values - ball_envelope_radius(1.0, p, st.t)).max()))

    evolve(initial_state(cfg, grid, body.support.values), cfg, on_accept=on_accept)
    tol = tol if tol is not None else (1e-8 if n == 2 else 1e-6)
    return _print_check(f"ball trajectory sup-error (n={n}, p={p})", worst, tol)


def verify_dual_crosscheck(n, p, resolution, tol=1e-3):
    grid = build_grid(n, resolution)
    axes = (1.0, 1.5) if n == 2 else (1.0, 1.2, 1.5)
    body = ConvexBody(shapes.ellipsoid_support(grid, axes))
    cfg = FlowConfig(n=n, p=p, direction=EXPANDING_PRIMAL, t_end=0.5,
                     resolution=grid.resolution)
    defect = cross_check_dual(body, cfg, horizon=0.5)
    return _print_check(f"dual cross-check defect (n={n}, p={p})", defect, tol)


def verify_kaltenbach(n, resolution, tol=None):
    grid = build_grid(n, resolution)
    axes = (1.0, 2.0) if n == 2 else (1.0, 1.2, 1.5)
    body = ConvexBody(shapes.ellipsoid_support(grid, axes))
    defect = kaltenbach_check(body)
    tol = tol if tol is not None else (1e-4 if n == 2 else 1e-2)
    return _print_check(f"Kaltenbach identity defect (n={n})", defect, tol)


def verify_rescaling(n, p, resolution, a=2.0, tol=1e-5):
    grid = build_grid(n, resolution)
    axes = (1.0, 1.5) if n == 2 else (1.0, 1.2, 1.5)
    body = ConvexBody(shapes.ellipsoid_support(grid, axes))
    cfg = FlowConfig(n=n, p=p, direction=EXPANDING_PRIMAL, t_end=1.0,
                     resolution=grid.resolution)
    defect = verify_rescaling_property(body, cfg, a)
    return _print_check(f"rescaling covariance defect (n={n}, a={a})", defect, tol)


def verify_g_properties(p, trials=1000, seed=7, tol=1e-8, n=3):
    """Concavity, monotonicity, inversion symmetry and Euler relation of the speed."""
    rng = np.random.default_rng(seed)
    nm1 = n - 1
    lam = rng.uniform(0.2, 5.0, size=(trials, nm1))
    ok = True

    lam_b = rng.uniform(0.2, 5.0, size=(trials, nm1))
    mid = 0.5 * (lam + lam_b)
    concave_defect = float((0.5 * (speed_G(lam, p) + speed_G(lam_b, p))
                            - speed_G(mid, p)).max())
    ok &= _print_check("concavity (avg of endpoints - midpoint)", concave_defect, tol)

    h = 1e-6 * lam
    dG = np.empty_like(lam)
    for i in range(nm1):
        lp, lm = lam.copy(), lam.copy()
        lp[:, i] += h[:, i]
        lm[:, i] -= h[:, i]
        dG[:, i] = (speed_G(lp, p) - speed_G(lm, p)) / (2.0 * h[:, i])
    ok &= _print_check("monotonicity (min dG/dlam > 0 shown as -min)",
                       float((-dG).max()), 0.0 + tol)

    inv_defect = float(np.abs(speed_G(lam, p) * speed_G(1.0 / lam, p) - 1.0).max())
    ok &= _print_check("inversion symmetry G(lam)*G(1/lam)-1", inv_defect, tol)

    euler_defect = float(np.abs((dG * lam).sum(1) / (p * speed_G(lam, p)) - 1.0).max())
    ok &= _print_check("degree relation sum(lam dG) = p G (relative)", euler_defect, tol)
    return ok


def verify_convergence(n, p, resolution, tol0=0.02, tol2=0.05, tol_ratio=0.01,
                       volume_growth=1e4, out_csv=None):
    """Expanding run from an ellipsoid until the volume grows by volume_growth."""
    grid = build_grid(n, resolution)
    axes = (1.0, 1.5) if n == 2 else (1.0, 1.2, 1.5)
    body = ConvexBody(shapes.ellipsoid_support(grid, axes))
    cfg = FlowConfig(n=n, p=p, direction=EXPANDING_PRIMAL, t_end=None,
                     resolution=grid.resolution, record_every=10)
    v_target = body.volume * volume_growth
    state = initial_state(cfg, grid, body.support.values)
    writer = TrajectoryWriter(out_csv, n) if out_csv else None
    if writer:
        writer.write(record(state, cfg))

    class _VolumeReached(Exception):
        pass

    running = [state]

    def on_accept(st):
        running[0] = st
        if writer and st.step_count % cfg.record_every == 0:
            writer.write(record(st, cfg))
        if st.body.volume >= v_target:
            raise _VolumeReached

    try:
        evolve(state, cfg, on_accept=on_accept)
    except _VolumeReached:
        pass
    final = running[0]
    if writer:
        writer.write(record(final, cfg))
        writer.close()
    from .flow import rescale_unit_volume
    resc = rescale_unit_volume(final.body)
    dev0 = float(np.abs(resc.support.values - 1.0).max())
    lam_dev = max(abs(resc.radii.lam_max - 1.0), abs(1.0 - resc.radii.lam_min))
    ratio = final.body.s_max / final.body.s_min
    ok = _print_check(f"dev_unit after volume x{volume_growth:g} (n={n})", dev0, tol0)
    ok &= _print_check("rescaled radii deviation", lam_dev, tol2)
    ok &= _print_check("ratio - 1", ratio - 1.0, tol_ratio)
    return ok


def verify_shrinking_widths(n, p, resolution, slack=1.1, tol_minkowski=1e-6):
    """Width-ratio boundedness and the centroid inclusion along a shrinking run."""
    grid = build_grid(n, resolution)
    axes = (1.0, 1.5) if n == 2 else (1.0, 1.2, 1.5)
    body = ConvexBody(shapes.ellipsoid_support(grid, axes))
    cfg = FlowConfig(n=n, p=p, direction=SHRINKING_PRIMAL,
                     v_stop=1e-4 * body.volume, resolution=grid.resolution)
    wr0 = body.width_plus / body.width_minus
    sup_ratio = wr0
    mink_worst = max(minkowski_inclusion_defect(body))
    state = initial_state(cfg, grid, body.support.values)
    check_every = 50

    def on_accept(st):
        nonlocal sup_ratio, mink_worst
        sup_ratio = max(sup_ratio, st.body.width_plus / st.body.width_minus)
        if st.step_count % check_every == 0:
            mink_worst = max(mink_worst, *minkowski_inclusion_defect(st.body))

    try:
        evolve(state, cfg, on_accept=on_accept)
    except Extinction:
        pass
    ok = _print_check(f"width-ratio sup over run (n={n}, p={p})", sup_ratio, wr0 * slack)
    ok &= _print_check("Minkowski centroid inclusion violation", mink_worst, tol_minkowski)
    return ok


SUITES = {
    "ball-exact": lambda a: verify_ball_exact(a.n, _p(a, 0.5), _res(a), a.tol),
    "dual-crosscheck": lambda a: verify_dual_crosscheck(a.n, _p(a, 0.5), _res(a),
                                                        a.tol or 1e-3),
    "kaltenbach": lambda a: verify_kaltenbach(a.n, _res(a), a.tol),
    "rescaling": lambda a: verify_rescaling(a.n, _p(a, 0.5), _res(a), tol=a.tol or 1e-5),
    "g-properties": lambda a: verify_g_properties(_p(a, 0.5), a.trials, a.seed,
                                                  a.tol or 1e-8, a.n),
    "convergence": lambda a: verify_convergence(a.n, _p(a, 0.5), _res(a)),
    "shrinking-widths": lambda a: verify_shrinking_widths(a.n, _p(a, 0.9), _res(a)),
}


def _p(args, default):
    return default if args.p is None else args.p


def _res(args):
    if args.resolution:
        return tuple(args.resolution)
    return (256,) if args.n == 2 else (64, 128)


def cmd_verify(args):
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}",
              file=sys.stderr)
        return EXIT_USAGE
    print(f"suite {args.suite}:")
    try:
        ok = SUITES[args.suite](args)
    except (NonConvexError, StepRejected, InterpolationFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, ConfigurationError) as exc:
        print(f"bad options: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if ok else EXIT_NUMERICAL


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

def cmd_report(csv_path, p=0.5):
    try:
        tr = read_trajectory(csv_path)
    except (OSError, TrajectoryFormatError) as exc:
        print(f"cannot read trajectory: {exc}", file=sys.stderr)
        return EXIT_USAGE
    reports = []
    if tr.expanding:
        reports.append(check_gradient_bound(tr))
        reports.append(check_ratio_convergence(tr))
        reports.append(check_curvature_bounds(tr, p=p))
        reports.append(check_unit_ball_convergence(tr))
    else:
        reports.append(check_width_ratio(tr))
    for rep in reports:
        print(rep)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_NUMERICAL


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def make_parser():
    ap = argparse.ArgumentParser(prog="gaussflow",
                                 description="Gauss curvature flow simulator on support functions")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="integrate a flow from a config file")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--out", required=True)

    ver_p = sub.add_parser("verify", help="run a verification suite")
    ver_p.add_argument("suite")
    ver_p.add_argument("--n", type=int, default=2)
    ver_p.add_argument("--p", type=float, default=None)
    ver_p.add_argument("--resolution", type=int, nargs="*", default=None)
    ver_p.add_argument("--trials", type=int, default=1000)
    ver_p.add_argument("--seed", type=int, default=7)
    ver_p.add_argument("--tol", type=float, default=None)

    rep_p = sub.add_parser("report", help="re-run bound checks on a trajectory CSV")
    rep_p.add_argument("csv")
    rep_p.add_argument("--p", type=float, default=0.5,
                       help="flow power (for the curvature decay exponent)")
    return ap


def main(argv=None):
    args = make_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "verify":
        return cmd_verify(args)
    return cmd_report(args.csv, p=args.p)


if __name__ == "__main__":
    sys.exit(main())
