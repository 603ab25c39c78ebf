"""Time evolution of convex bodies under Gauss-curvature-type speeds.

Four method-of-lines integrators over the fixed sphere grid:

  expanding_primal   ds/dt = +Phi(z) * det^{ p/(n-1)}      (support function)
  shrinking_primal   ds/dt = -Phi(z) * det^{-p/(n-1)}      (support function)
  expanding_dual     the induced motion of the dual body's support function
  expanding_radial   dr/dt = -r^2 * (dual speed of 1/r)    (radial function)

`det` is the determinant of the radii-of-curvature matrix (reciprocal Gauss
curvature).  Time stepping is classical RK4 with dt = c_safe * h_min^2 /
D_max, where D_max is the largest eigenvalue of the linearized diffusion,
beta * |speed| / lambda_min per node.  The dual and radial integrators are
deliberately independent of the primal one so cross-validation is a genuine
two-sided test.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .convex import AnisotropyPhi, ConvexBody, NonConvexError, radii_matrix
from .sphere import ScalarField, SphereGrid, apply_polar_filter, covariant_gradient

EXPANDING_PRIMAL = "expanding_primal"
EXPANDING_DUAL = "expanding_dual"
EXPANDING_RADIAL = "expanding_radial"
SHRINKING_PRIMAL = "shrinking_primal"
DIRECTIONS = (EXPANDING_PRIMAL, EXPANDING_DUAL, EXPANDING_RADIAL, SHRINKING_PRIMAL)

UNIT_BALL_VOLUME = {2: np.pi, 3: 4.0 * np.pi / 3.0}


class DomainError(RuntimeError):
    """State left the admissible set (e.g. dual support not positive)."""


class StepRejected(RuntimeError):
    """A step could not be accepted after the retry budget."""


class Extinction(Exception):
    """Shrinking flow reached the volume floor; carries the final state."""

    def __init__(self, state):
        self.state = state
        super().__init__(f"volume floor reached at t = {state.t:.9g}")


@dataclass(frozen=True)
class FlowConfig:
    """Flow parameters; grid resolution and output cadence ride along."""

    n: int
    p: float
    direction: str = EXPANDING_PRIMAL
    phi: AnisotropyPhi | None = None
    t_end: float | None = None
    dt_safety: float = 0.2
    v_stop: float | None = None
    resolution: tuple = ()
    record_every: int = 1
    snapshot_every: int = 0
    max_rejects: int = 20

    def __post_init__(self):
        if self.p <= 0:
            raise ValueError("power p must be positive")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown direction {self.direction!r}")
        if not 0 < self.dt_safety <= 1:
            raise ValueError("dt_safety must lie in (0, 1]")
        if self.direction == SHRINKING_PRIMAL:
            if self.v_stop is None or self.v_stop <= 0:
                raise ValueError("shrinking flow requires a positive v_stop")
        elif self.t_end is not None and self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.phi is None:
            object.__setattr__(self, "phi", AnisotropyPhi.constant(1.0, self.n))

    @property
    def beta(self):
        return self.p / (self.n - 1)


@dataclass(frozen=True)
class FlowState:
    """One accepted point of a trajectory.

    `values` is the evolved field (support function for primal directions,
    dual support for the dual flow, radial function for the radial flow);
    `body` is the convex body those values describe (for the radial flow,
    the dual body of 1/r).
    """

    t: float
    values: np.ndarray = field(repr=False)
    body: ConvexBody
    dt_last: float = 0.0
    step_count: int = 0


def _state_body(cfg, grid, values):
    if cfg.direction == EXPANDING_RADIAL:
        if (values <= 0).any():
            raise DomainError("radial function must stay positive")
        return ConvexBody.from_values(grid, 1.0 / values)
    return ConvexBody.from_values(grid, values)


def initial_state(cfg, grid, values):
    return FlowState(t=0.0, values=np.asarray(values, float),
                     body=_state_body(cfg, grid, values))


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------

def _dual_speed(grid, s, cfg):
    """Speed of the dual support function (negative), plus controller data."""
    n, p, beta = cfg.n, cfg.p, cfg.beta
    if (s <= 0).any():
        raise DomainError("dual support function must stay positive")
    radii = radii_matrix(ScalarField(grid, s))
    g = covariant_gradient(grid, s)
    gradsq = sum(c * c for c in g)
    q = s * s + gradsq
    if cfg.phi.is_constant_one:
        phi_val = 1.0
    else:
        x = s[..., None] * grid.nodes + g[0][..., None] * grid.e_theta
        if grid.ambient_dim == 3:
            x = x + g[1][..., None] * grid.e_phi
        phi_val = cfg.phi(x / np.sqrt(q)[..., None])
    ex_q = (n + 1) * p / (2.0 * (n - 1)) + 0.5
    ex_s = (n + 1) * p / (n - 1) - 1.0
    speed = -phi_val * (q ** ex_q / s ** ex_s) * radii.det ** (-beta)
    ctrl = beta * float((np.abs(speed) / radii.lambdas[..., 0]).max())
    return speed, ctrl


def _speed(grid, values, cfg, direction=None):
    """RHS of the requested flow and the diffusion bound for the dt rule."""
    beta = cfg.beta
    direction = cfg.direction if direction is None else direction
    if direction == EXPANDING_PRIMAL:
        radii = radii_matrix(ScalarField(grid, values))
        speed = cfg.phi(grid.nodes) * radii.det ** beta
        ctrl = beta * float((speed / radii.lambdas[..., 0]).max())
        return speed, ctrl
    if direction == SHRINKING_PRIMAL:
        radii = radii_matrix(ScalarField(grid, values))
        speed = -cfg.phi(grid.nodes) * radii.det ** (-beta)
        ctrl = beta * float((np.abs(speed) / radii.lambdas[..., 0]).max())
        return speed, ctrl
    if direction == EXPANDING_DUAL:
        return _dual_speed(grid, values, cfg)
    # radial: chain rule through the dual support 1/r
    if (values <= 0).any():
        raise DomainError("radial function must stay positive")
    dual_speed, ctrl = _dual_speed(grid, 1.0 / values, cfg)
    return -values * values * dual_speed, ctrl


def rhs_expanding(f: ScalarField, cfg) -> ScalarField:
    speed, _ = _speed(f.grid, f.values, cfg, direction=EXPANDING_PRIMAL)
    return ScalarField(f.grid, speed)


def rhs_shrinking(f: ScalarField, cfg) -> ScalarField:
    speed, _ = _speed(f.grid, f.values, cfg, direction=SHRINKING_PRIMAL)
    return ScalarField(f.grid, speed)


def rhs_dual(f: ScalarField, cfg) -> ScalarField:
    speed, _ = _speed(f.grid, f.values, cfg, direction=EXPANDING_DUAL)
    return ScalarField(f.grid, speed)


def rhs_radial(f: ScalarField, cfg) -> ScalarField:
    speed, _ = _speed(f.grid, f.values, cfg, direction=EXPANDING_RADIAL)
    return ScalarField(f.grid, speed)


def stable_dt(grid: SphereGrid, diffusion_max, c_safe):
    h_min = grid.h_theta if grid.ambient_dim == 2 else min(grid.h_theta, grid.h_phi)
    return c_safe * h_min * h_min / diffusion_max


# --------------------------------------------------------------------------
# stepping
# --------------------------------------------------------------------------

def _tendency(grid, values, cfg):
    speed, ctrl = _speed(grid, values, cfg)
    return apply_polar_filter(grid, speed), ctrl


def step(state: FlowState, cfg: FlowConfig, dt=None, dt_cap=None) -> FlowState:
    """One accepted RK4 step; halves dt on convexity loss or bad values.

    dt defaults to the parabolic bound c_safe * h_min^2 / D_max, optionally
    clipped to dt_cap (used to land exactly on checkpoint times).  Raises
    StepRejected after cfg.max_rejects halvings and Extinction when a
    shrinking flow crosses the volume floor.
    """
    grid = state.body.grid
    k1, ctrl = _tendency(grid, state.values, cfg)
    if dt is None:
        dt = stable_dt(grid, ctrl, cfg.dt_safety)
        if dt_cap is not None:
            dt = min(dt, dt_cap)
    for _ in range(cfg.max_rejects + 1):
        try:
            k2, _ = _tendency(grid, state.values + 0.5 * dt * k1, cfg)
            k3, _ = _tendency(grid, state.values + 0.5 * dt * k2, cfg)
            k4, _ = _tendency(grid, state.values + dt * k3, cfg)
            new_values = state.values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(new_values).all():
                raise DomainError("non-finite state")
            body = _state_body(cfg, grid, new_values)
        except (NonConvexError, DomainError, ValueError):
            dt *= 0.5
            continue
        new_state = FlowState(t=state.t + dt, values=new_values, body=body,
                              dt_last=dt, step_count=state.step_count + 1)
        if cfg.direction == SHRINKING_PRIMAL and body.volume < cfg.v_stop:
            raise Extinction(new_state)
        return new_state
    raise StepRejected(f"no acceptable step at t = {state.t:.9g} (dt down to {dt:.3e})")


def _time_tol(t):
    return 1e-12 * max(1.0, abs(t))


def evolve(state: FlowState, cfg: FlowConfig, t_target=None, on_accept=None,
           checkpoints=(), on_checkpoint=None):
    """Advance until t_target (or Extinction), stopping exactly on checkpoints.

    `on_accept(state)` fires after every accepted step, `on_checkpoint(state)`
    whenever a checkpoint time is hit.  With t_target None (shrinking runs)
    the loop only ends through Extinction.  Returns the final state.
    """
    if t_target is None:
        t_target = cfg.t_end
    cps = sorted(float(c) for c in checkpoints)
    ci = 0
    while ci < len(cps) and cps[ci] <= state.t + _time_tol(cps[ci]):
        ci += 1
    while True:
        if t_target is not None and state.t >= t_target - _time_tol(t_target):
            return state
        bounds = ([] if t_target is None else [t_target]) + ([] if ci >= len(cps) else [cps[ci]])
        cap = min(bounds) - state.t if bounds else None
        state = step(state, cfg, dt_cap=cap)
        if on_accept is not None:
            on_accept(state)
        while ci < len(cps) and state.t >= cps[ci] - _time_tol(cps[ci]):
            if on_checkpoint is not None:
                on_checkpoint(state)
            ci += 1


# --------------------------------------------------------------------------
# normalization and verification runs
# --------------------------------------------------------------------------

def rescale_unit_volume(body: ConvexBody) -> ConvexBody:
    """Dilate so the volume equals the unit-ball volume of R^n."""
    n = body.grid.ambient_dim
    factor = (UNIT_BALL_VOLUME[n] / body.volume) ** (1.0 / n)
    return body.scaled(factor)


def ball_envelope_radius(r0, p, t):
    """Radius of the round solution of the expanding flow with Phi = 1."""
    return (r0 ** (1.0 - p) + (1.0 - p) * t) ** (1.0 / (1.0 - p))


def shrinking_ball_radius(r0, p, t):
    return (r0 ** (1.0 + p) - (1.0 + p) * t) ** (1.0 / (1.0 + p))


def verify_rescaling_property(body0: ConvexBody, cfg: FlowConfig, a,
                              checkpoints=(0.1, 0.5, 1.0)):
    """Defect of the dilation covariance s_a(., t) = a^{1/n} s(., a^{(p-1)/n} t).

    Runs the flow from s0 and from a^{1/n} s0 and compares at the checkpoint
    times, normalized by the field magnitude.  Expanding primal flow only.
    """
    if cfg.direction != EXPANDING_PRIMAL:
        raise ValueError("rescaling verification is defined for the expanding primal flow")
    n = cfg.n
    lam = a ** (1.0 / n)
    tau_factor = a ** ((cfg.p - 1.0) / n)
    cps = tuple(float(c) for c in checkpoints)

    grabbed = {}

    def grab(store):
        def cb(st):
            store[round(st.t, 12)] = st.values.copy()
        return cb

    ref = {}
    st0 = initial_state(cfg, body0.grid, body0.support.values)
    evolve(st0, cfg, t_target=max(c * tau_factor for c in cps),
           checkpoints=[c * tau_factor for c in cps], on_checkpoint=grab(ref))

    scaled = {}
    st1 = initial_state(cfg, body0.grid, lam * body0.support.values)
    evolve(st1, cfg, t_target=max(cps), checkpoints=cps, on_checkpoint=grab(scaled))

    defect = 0.0
    for c in cps:
        predicted = lam * _nearest(ref, c * tau_factor)
        computed = _nearest(scaled, c)
        defect = max(defect, float(np.abs(predicted - computed).max() / np.abs(computed).max()))
    return defect


def _nearest(store, t):
    key = min(store, key=lambda k: abs(k - t))
    if abs(key - t) > 1e-9 * max(1.0, abs(t)):
        raise RuntimeError(f"checkpoint {t} missed (closest {key})")
    return store[key]


def cross_check_dual(body0: ConvexBody, cfg: FlowConfig, horizon, n_checkpoints=4):
    """Max sup-norm defect between dual-of-primal and the dual trajectory.

    The primal support evolves under the expanding flow; independently the
    dual support evolves under the induced dual equation from the dualized
    initial body.  At each checkpoint the primal state is dualized and
    compared against the dual trajectory.
    """
    from .convex import polar_dual

    if cfg.direction != EXPANDING_PRIMAL:
        raise ValueError("cross-check starts from an expanding primal config")
    cps = [horizon * (k + 1) / n_checkpoints for k in range(n_checkpoints)]

    primal = {}
    st = initial_state(cfg, body0.grid, body0.support.values)
    evolve(st, cfg, t_target=horizon, checkpoints=cps,
           on_checkpoint=lambda s: primal.__setitem__(round(s.t, 12), s.body))

    dual_cfg = replace(cfg, direction=EXPANDING_DUAL)
    dual0 = polar_dual(body0)
    dual_states = {}
    std = initial_state(dual_cfg, body0.grid, dual0.support.values)
    evolve(std, dual_cfg, t_target=horizon, checkpoints=cps,
           on_checkpoint=lambda s: dual_states.__setitem__(round(s.t, 12), s.values.copy()))

    defect = 0.0
    for c in cps:
        body_c = _nearest(primal, c)
        dual_of_primal = polar_dual(body_c).support.values
        defect = max(defect, float(np.abs(dual_of_primal - _nearest(dual_states, c)).max()))
    return defect
