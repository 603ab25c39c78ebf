"""Static convex geometry in the support-function representation.

A strictly convex body K with the origin interior is encoded by its support
function s on the unit sphere.  The matrix of radii of curvature is
r_ij = (cov Hessian of s)_ij + s g_ij; its eigenvalues relative to the round
metric are the principal radii, their product det_g(r) is the reciprocal
Gauss curvature pulled back by the Gauss map.

The polar dual K° has support function 1/r_K where r_K is the radial
function of K; both conversions and the Kaltenbach identity check
(K/s^{n+1})(x) * (K°/s°^{n+1})(x°) = 1 with <x, x°> = 1 live here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .sphere import (
    FieldSampler,
    ScalarField,
    SphereGrid,
    covariant_gradient,
    fourier_coeffs,
    fourier_eval,
    frame_hessian,
    wrap_sphere_coords,
)

# strict-convexity threshold, relative to the largest principal radius so
# the test is scale-free; a violation means the discretization broke down
EPS_CONVEX = 1e-8


class NonConvexError(RuntimeError):
    """Smallest principal radius of curvature dropped below threshold."""

    def __init__(self, lam_min, lam_max, where=None):
        self.lam_min = lam_min
        self.lam_max = lam_max
        self.where = where
        super().__init__(
            f"strict convexity lost: lambda_min={lam_min:.3e} (max {lam_max:.3e}) at node {where}")


class InterpolationFailure(RuntimeError):
    """Radial/dual conversion could not locate boundary data for a direction."""


# --------------------------------------------------------------------------
# anisotropy
# --------------------------------------------------------------------------

class AnisotropyPhi:
    """Positive smooth weight on unit normals, stored symbolically.

    Kept in closed form (family tag + coefficients) because the dual flow
    evaluates it at off-grid directions.  Families: constant c; dipole
    1 + <v, z> scaled so the coefficient vector has norm < 1; quadrupole
    1 + eps*(z_k^2 - 1/n).
    """

    def __init__(self, family, params, ambient_dim):
        self.family = family
        self.params = params
        self.ambient_dim = int(ambient_dim)
        if self.infimum() <= 0.0:
            raise ValueError(f"anisotropy not positive: inf = {self.infimum():.3e}")

    @classmethod
    def constant(cls, c=1.0, ambient_dim=2):
        return cls("const", {"c": float(c)}, ambient_dim)

    @classmethod
    def dipole(cls, coeff, ambient_dim):
        v = np.asarray(coeff, dtype=float)
        if v.shape != (ambient_dim,):
            raise ValueError(f"dipole coefficient must have {ambient_dim} components")
        return cls("dipole", {"v": v}, ambient_dim)

    @classmethod
    def quadrupole(cls, eps, axis, ambient_dim):
        if not 0 <= int(axis) < ambient_dim:
            raise ValueError("quadrupole axis out of range")
        return cls("quadrupole", {"eps": float(eps), "axis": int(axis)}, ambient_dim)

    def infimum(self):
        n = self.ambient_dim
        if self.family == "const":
            return self.params["c"]
        if self.family == "dipole":
            return 1.0 - float(np.linalg.norm(self.params["v"]))
        eps = self.params["eps"]
        return 1.0 - eps / n if eps >= 0 else 1.0 + eps * (1.0 - 1.0 / n)

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        if self.family == "const":
            return np.full(points.shape[:-1], self.params["c"])
        if self.family == "dipole":
            return 1.0 + points @ self.params["v"]
        eps, k = self.params["eps"], self.params["axis"]
        return 1.0 + eps * (points[..., k] ** 2 - 1.0 / self.ambient_dim)

    @property
    def is_constant_one(self):
        return self.family == "const" and self.params["c"] == 1.0

    def describe(self):
        if self.family == "const":
            return f"const {self.params['c']:g}"
        if self.family == "dipole":
            return "dipole " + " ".join(f"{v:g}" for v in self.params["v"])
        return f"quadrupole {self.params['eps']:g} {self.params['axis']}"


# --------------------------------------------------------------------------
# radii of curvature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RadiiField:
    """Per-node radii-of-curvature data of a strictly convex body.

    `mat` holds the symmetric matrix in the orthonormal frame (theta-hat,
    phi-hat), whose eigenvalues equal the eigenvalues relative to the round
    metric.  `det` is their product (the reciprocal Gauss curvature).
    """

    grid: SphereGrid
    mat: np.ndarray = field(repr=False)      # (..., n-1, n-1)
    lambdas: np.ndarray = field(repr=False)  # (..., n-1), ascending
    det: np.ndarray = field(repr=False)

    @property
    def gauss(self):
        return 1.0 / self.det

    @property
    def kappas(self):
        return 1.0 / self.lambdas

    @property
    def mean_curv(self):
        return (1.0 / self.lambdas).sum(axis=-1)

    @property
    def lam_min(self):
        return float(self.lambdas[..., 0].min())

    @property
    def lam_max(self):
        return float(self.lambdas[..., -1].max())


def radii_matrix(f: ScalarField, check_convex=True) -> RadiiField:
    """Radii-of-curvature matrix, eigenvalues and determinant of a support field."""
    grid = f.grid
    s = f.values
    H11, H12, H22 = frame_hessian(grid, s)
    if grid.ambient_dim == 2:
        lam = H11 + s
        mat = lam[:, None, None]
        lambdas = lam[:, None]
        det = lam
    else:
        A11 = H11 + s
        A12 = H12
        A22 = H22 + s
        mat = np.empty(grid.field_shape + (2, 2))
        mat[..., 0, 0] = A11
        mat[..., 0, 1] = A12
        mat[..., 1, 0] = A12
        mat[..., 1, 1] = A22
        half_tr = 0.5 * (A11 + A22)
        disc = np.sqrt(np.maximum(0.25 * (A11 - A22) ** 2 + A12 ** 2, 0.0))
        lambdas = np.stack([half_tr - disc, half_tr + disc], axis=-1)
        det = A11 * A22 - A12 * A12
    out = RadiiField(grid, mat, lambdas, det)
    if check_convex:
        lam_min = out.lambdas[..., 0].min()
        lam_max = out.lambdas[..., -1].max()
        if not np.isfinite(lam_min) or lam_min <= EPS_CONVEX * lam_max:
            where = np.unravel_index(int(out.lambdas[..., 0].argmin()), grid.field_shape)
            raise NonConvexError(float(lam_min), float(lam_max), where)
    return out


def speed_G(lambdas, p):
    """(product of principal radii)^(p/(n-1)) for positive radii."""
    lam = np.asarray(lambdas, dtype=float)
    if p <= 0:
        raise ValueError(f"power p must be positive, got {p}")
    if (lam <= 0).any():
        raise ValueError("principal radii must be positive")
    nm1 = lam.shape[-1]
    out = lam.prod(axis=-1) ** (p / nm1)
    return float(out) if out.ndim == 0 else out


def boundary_points(f: ScalarField) -> np.ndarray:
    """Boundary point x = s z + grad s with normal z, per node (..., n)."""
    grid = f.grid
    g = covariant_gradient(grid, f.values)
    x = f.values[..., None] * grid.nodes
    if grid.ambient_dim == 2:
        return x + g[0][..., None] * grid.e_theta
    return x + g[0][..., None] * grid.e_theta + g[1][..., None] * grid.e_phi


# --------------------------------------------------------------------------
# radial function / polar dual
# --------------------------------------------------------------------------

def _radial_circle(grid, s_values, iters=48):
    """Radial function on S^1 by inverting the boundary-angle map.

    The boundary point with normal angle theta sits at polar angle
    alpha(theta) = theta + atan2(s', s), strictly increasing for strictly
    convex bodies with interior origin; a bracketed bisection on the
    trigonometric interpolant recovers theta(alpha) to ~1e-14 rad.
    """
    cs = fourier_coeffs(s_values)

    def bound_angle(th):
        sv = fourier_eval(cs, th, 0)
        sd = fourier_eval(cs, th, 1)
        return th + np.arctan2(sd, sv)

    theta = grid.theta
    N = len(theta)
    alpha = bound_angle(theta)
    if not (np.diff(alpha) > 0).all():
        raise InterpolationFailure("boundary-angle map is not monotone")
    al_ext = np.concatenate([alpha, alpha[:1] + 2.0 * np.pi])
    th_ext = np.concatenate([theta, theta[:1] + 2.0 * np.pi])
    psi = al_ext[0] + np.mod(theta - al_ext[0], 2.0 * np.pi)
    idx = np.clip(np.searchsorted(al_ext, psi, side="right") - 1, 0, N - 1)
    lo, hi = th_ext[idx], th_ext[idx + 1]
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = bound_angle(mid) < psi
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    th = 0.5 * (lo + hi)
    sv = fourier_eval(cs, th, 0)
    sd = fourier_eval(cs, th, 1)
    return np.sqrt(sv * sv + sd * sd)


_ZOOM_OFFSETS = np.arange(-2.0, 3.0)
_ZOOM_DESIGN = None


def _zoom_design():
    global _ZOOM_DESIGN
    if _ZOOM_DESIGN is None:
        OI, OJ = np.meshgrid(_ZOOM_OFFSETS, _ZOOM_OFFSETS, indexing="ij")
        X = np.stack([np.ones(25), OI.ravel(), OJ.ravel(),
                      OI.ravel() ** 2, (OI * OJ).ravel(), OJ.ravel() ** 2], axis=1)
        _ZOOM_DESIGN = np.linalg.pinv(X)
    return _ZOOM_DESIGN


def _radial_sphere(grid, s_values, levels=3, zoom=6.0, max_walk=40):
    """Radial function on S^2 via r(u) = 1 / max_z <u,z>/s(z).

    The maximizer is the Gauss-map direction of the boundary point along u.
    Seeded with the nearest boundary-cloud direction, then refined by
    walking 5x5 patches of a bicubic interpolant of s and fitting a local
    quadratic, zooming the patch spacing after each level.
    """
    sampler = FieldSampler(grid, s_values)
    f = ScalarField(grid, s_values)
    X = boundary_points(f)
    U = X / np.linalg.norm(X, axis=-1, keepdims=True)
    tree = cKDTree(U.reshape(-1, 3))
    u = grid.nodes.reshape(-1, 3)
    _, nn = tree.query(u)
    ii, jj = np.unravel_index(nn, grid.field_shape)
    ct = grid.theta[ii].copy()
    cp = grid.phi[jj].copy()
    M = len(u)
    off = _ZOOM_OFFSETS
    P = _zoom_design()
    dth, dph = grid.h_theta, grid.h_phi

    def patch_values(ct, cp, dth, dph):
        TH = ct[:, None, None] + dth * off[None, :, None]
        PH = cp[:, None, None] + dph * off[None, None, :]
        TH = np.broadcast_to(TH, (M, 5, 5))
        PH = np.broadcast_to(PH, (M, 5, 5))
        sv = sampler.at_angles(TH, PH)
        zq = np.stack([np.sin(TH) * np.cos(PH), np.sin(TH) * np.sin(PH), np.cos(TH)], axis=-1)
        obj = (zq * u[:, None, None, :]).sum(-1) / sv
        return obj

    for _ in range(levels):
        ai = aj = None
        for _ in range(max_walk):
            obj = patch_values(ct, cp, dth, dph)
            am = obj.reshape(M, 25).argmax(axis=1)
            ai, aj = np.unravel_index(am, (5, 5))
            interior = (ai > 0) & (ai < 4) & (aj > 0) & (aj < 4)
            if interior.all():
                break
            ct = np.where(interior, ct, ct + dth * (ai - 2))
            cp = np.where(interior, cp, cp + dph * (aj - 2))
        else:
            raise InterpolationFailure("patch walk for the radial map did not settle")
        ct = ct + dth * (ai - 2)
        cp = cp + dph * (aj - 2)
        coef = patch_values(ct, cp, dth, dph).reshape(M, 25) @ P.T
        c1, c2, c3, c4, c5 = coef[:, 1], coef[:, 2], coef[:, 3], coef[:, 4], coef[:, 5]
        det = 4.0 * c3 * c5 - c4 * c4
        safe = np.abs(det) > 1e-30
        dd = np.where(safe, det, 1.0)
        xs = np.clip(np.where(safe, (-2.0 * c5 * c1 + c4 * c2) / dd, 0.0), -2.0, 2.0)
        ys = np.clip(np.where(safe, (c4 * c1 - 2.0 * c3 * c2) / dd, 0.0), -2.0, 2.0)
        ct = ct + dth * xs
        cp = cp + dph * ys
        dth /= zoom
        dph /= zoom
    th, ph = wrap_sphere_coords(ct, cp)
    sv = sampler.at_angles(th, ph)
    zf = np.stack([np.sin(ct) * np.cos(cp), np.sin(ct) * np.sin(cp), np.cos(ct)], axis=-1)
    obj = (zf * u).sum(-1) / sv
    if (obj <= 0).any() or not np.isfinite(obj).all():
        raise InterpolationFailure("radial maximization produced invalid values")
    return (1.0 / obj).reshape(grid.field_shape)


def support_to_radial(f: ScalarField) -> ScalarField:
    """Radial function of the body with support field f, on the same grid."""
    if (f.values <= 0).any():
        raise InterpolationFailure("support function must be positive (origin interior)")
    if f.grid.ambient_dim == 2:
        r = _radial_circle(f.grid, f.values)
    else:
        r = _radial_sphere(f.grid, f.values)
    return ScalarField(f.grid, r)


# --------------------------------------------------------------------------
# body with cached derived quantities
# --------------------------------------------------------------------------

def _volume(grid, s, radii):
    # V = (1/n) * integral of s * det over the sphere
    return float(np.sum(s * radii.det * grid.quad_weights)) / grid.ambient_dim


def _widths(grid, s):
    w = s + grid.antipodal(s)
    return float(w.min()), float(w.max())


def _centroid(grid, s, radii, x, vol):
    n = grid.ambient_dim
    integrand = (s * radii.det)[..., None] * x * grid.quad_weights[..., None]
    axes = tuple(range(integrand.ndim - 1))
    return integrand.sum(axis=axes) / ((n + 1) * vol)


class ConvexBody:
    """Strictly convex body, origin interior, with eagerly cached geometry.

    Immutable after construction; construction raises NonConvexError or
    ValueError when the data do not describe such a body.
    """

    def __init__(self, support: ScalarField):
        if (support.values <= 0).any():
            raise ValueError("support function must be positive (origin interior)")
        self.support = support
        self.grid = support.grid
        self.radii = radii_matrix(support)
        self.boundary = boundary_points(support)
        self.volume = _volume(self.grid, support.values, self.radii)
        self.s_min = float(support.values.min())
        self.s_max = float(support.values.max())
        self.width_minus, self.width_plus = _widths(self.grid, support.values)
        self.centroid = _centroid(self.grid, support.values, self.radii,
                                  self.boundary, self.volume)

    @classmethod
    def from_values(cls, grid, values):
        return cls(ScalarField(grid, np.asarray(values, dtype=float)))

    def scaled(self, factor):
        return ConvexBody.from_values(self.grid, factor * self.support.values)

    def translated(self, vec):
        return ConvexBody.from_values(self.grid, self.support.values + self.grid.nodes @ np.asarray(vec, float))

    def __repr__(self):
        return (f"ConvexBody({self.grid}, V={self.volume:.6g}, "
                f"s in [{self.s_min:.4g}, {self.s_max:.4g}])")


def volume(body: ConvexBody) -> float:
    return body.volume


def widths_and_centroid(body: ConvexBody):
    return body.width_minus, body.width_plus, body.centroid


def polar_dual(body: ConvexBody) -> ConvexBody:
    """Dual body: support function = reciprocal radial function."""
    r = support_to_radial(body.support)
    return ConvexBody.from_values(body.grid, 1.0 / r.values)


def kaltenbach_check(body: ConvexBody, guard_tol=1e-5) -> float:
    """Max defect of (gauss/s^{n+1}) * (gauss°/s°^{n+1}) - 1 over paired points.

    The node z of K carries the boundary point x(z); its partner on the dual
    boundary lies in direction x/|x| and is found by sampling the dual grid
    there.  The pairing <x, x°> = 1 is verified to guard_tol first.
    """
    grid = body.grid
    n = grid.ambient_dim
    dual = polar_dual(body)

    A = body.radii.gauss / body.support.values ** (n + 1)
    Qd = dual.radii.gauss / dual.support.values ** (n + 1)

    x = body.boundary
    u = x / np.linalg.norm(x, axis=-1, keepdims=True)

    xd = dual.boundary
    pair = np.zeros(grid.field_shape)
    for c in range(n):
        pair += FieldSampler(grid, xd[..., c]).at_directions(u) * x[..., c]
    worst = float(np.abs(pair - 1.0).max())
    if worst > guard_tol:
        raise InterpolationFailure(f"dual pairing guard failed: |<x,x°>-1| = {worst:.3e}")

    B = FieldSampler(grid, Qd).at_directions(u)
    return float(np.abs(A * B - 1.0).max())


# --------------------------------------------------------------------------
# snapshot files
# --------------------------------------------------------------------------

def _fmt(x):
    return f"{x:.17g}"


def save_snapshot(body: ConvexBody, t, path):
    """Body snapshot: header `n,N...,t`, then one `coords...,s` line per node."""
    grid = body.grid
    lines = [",".join([str(grid.ambient_dim)] + [str(r) for r in grid.resolution] + [_fmt(t)])]
    s = body.support.values
    if grid.ambient_dim == 2:
        for th, v in zip(grid.theta, s):
            lines.append(f"{_fmt(th)},{_fmt(v)}")
    else:
        for i, th in enumerate(grid.theta):
            for j, ph in enumerate(grid.phi):
                lines.append(f"{_fmt(th)},{_fmt(ph)},{_fmt(s[i, j])}")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_snapshot(path):
    """Read a snapshot file; returns (body, t)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split(",")
    n = int(head[0])
    res = tuple(int(x) for x in head[1:-1])
    t = float(head[-1])
    grid = SphereGrid(n, res)
    if len(lines) - 1 != grid.node_count:
        raise ValueError(f"snapshot has {len(lines)-1} nodes, expected {grid.node_count}")
    vals = np.array([float(ln.split(",")[-1]) for ln in lines[1:]])
    return ConvexBody.from_values(grid, vals.reshape(grid.field_shape)), t
