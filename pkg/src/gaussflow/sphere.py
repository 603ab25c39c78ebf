"""Grids and calculus on the unit sphere S^{n-1} for n in {2, 3}.

The circle S^1 is sampled uniformly and differentiated spectrally (support
functions of smooth convex bodies are analytic, so the n=2 pipeline serves
as a high-precision oracle).  The sphere S^2 uses a shifted latitude/
longitude grid theta_i = (i + 1/2) pi / N_theta (no node on a pole) with
fourth-order centered finite differences; rows beyond the poles are filled
by the reflection rule f(-theta, phi) = f(theta, phi + pi), which is exact
for any function on the sphere and requires N_phi even.

Covariant derivatives are with respect to the round metric
g = diag(1, sin^2 theta).  Quadrature is the midpoint rule with weights
proportional to sin(theta_i), rescaled so they sum exactly to the sphere
area (for S^1 the uniform weights already do).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline


class ConfigurationError(ValueError):
    """Unsupported dimension or grid resolution."""


# --------------------------------------------------------------------------
# grid
# --------------------------------------------------------------------------

class SphereGrid:
    """Immutable discretization of S^{n-1} with quadrature and frames.

    Attributes:
        ambient_dim: n, 2 for the circle, 3 for the sphere.
        resolution: (N,) for S^1, (N_theta, N_phi) for S^2.
        theta, phi: 1-d node coordinate arrays (phi is None for S^1).
        h_theta, h_phi: grid spacings in radians (h_phi None for S^1).
        nodes: unit vectors, shape (N, 2) or (N_theta, N_phi, 3).
        quad_weights: positive weights summing to the area of S^{n-1}.
    """

    def __init__(self, ambient_dim, resolution):
        if ambient_dim not in (2, 3):
            raise ConfigurationError(f"ambient_dim must be 2 or 3, got {ambient_dim}")
        self.ambient_dim = int(ambient_dim)

        if self.ambient_dim == 2:
            (N,) = resolution
            if N < 16 or N % 2 != 0:
                raise ConfigurationError(f"S^1 resolution must be even and >= 16, got {N}")
            self.resolution = (int(N),)
            self.h_theta = 2.0 * np.pi / N
            self.h_phi = None
            self.theta = np.arange(N) * self.h_theta
            self.phi = None
            self.nodes = np.stack([np.cos(self.theta), np.sin(self.theta)], axis=-1)
            self.quad_weights = np.full(N, self.h_theta)
            # tangent frame e_theta
            self.e_theta = np.stack([-np.sin(self.theta), np.cos(self.theta)], axis=-1)
        else:
            Nt, Np = resolution
            if Nt < 16 or Np < 32 or Np % 2 != 0:
                raise ConfigurationError(
                    f"S^2 resolution must satisfy N_theta>=16, N_phi>=32 even, got {Nt}x{Np}")
            self.resolution = (int(Nt), int(Np))
            self.h_theta = np.pi / Nt
            self.h_phi = 2.0 * np.pi / Np
            self.theta = (np.arange(Nt) + 0.5) * self.h_theta
            self.phi = np.arange(Np) * self.h_phi
            TH, PH = np.meshgrid(self.theta, self.phi, indexing="ij")
            st, ct = np.sin(TH), np.cos(TH)
            self.nodes = np.stack([st * np.cos(PH), st * np.sin(PH), ct], axis=-1)
            w = st * self.h_theta * self.h_phi
            self.quad_weights = w * (4.0 * np.pi / w.sum())
            self.sin_t = np.sin(self.theta)[:, None]
            self.cos_t = np.cos(self.theta)[:, None]
            self.e_theta = np.stack([ct * np.cos(PH), ct * np.sin(PH), -st], axis=-1)
            self.e_phi = np.stack([-np.sin(PH), np.cos(PH), np.zeros_like(PH)], axis=-1)
            # azimuthal wavenumbers kept at each row: a smooth field on the
            # sphere carries ~sin(theta)*N_theta resolvable modes per row, and
            # keeping more than that breaks the dt ~ h^2 explicit step near
            # the poles.
            m = np.arange(Np // 2 + 1)
            mmax = np.maximum(1, np.floor(np.sin(self.theta) * Nt)).astype(int)
            self.phi_mode_mask = m[None, :] <= mmax[:, None]

    @property
    def node_count(self):
        return int(np.prod(self.resolution))

    @property
    def field_shape(self):
        return self.resolution if self.ambient_dim == 3 else (self.resolution[0],)

    def antipodal(self, values):
        """Values of the field at -z for each node z."""
        if self.ambient_dim == 2:
            return np.roll(values, len(values) // 2)
        return np.roll(values[::-1, :], self.resolution[1] // 2, axis=1)

    def __repr__(self):
        res = "x".join(str(r) for r in self.resolution)
        return f"SphereGrid(S^{self.ambient_dim - 1}, {res})"


def build_grid(n, resolution):
    """Construct a SphereGrid; `resolution` is N (S^1) or (N_theta, N_phi)."""
    if np.isscalar(resolution):
        resolution = (int(resolution),)
    return SphereGrid(n, tuple(int(r) for r in resolution))


@dataclass(frozen=True)
class ScalarField:
    """Real-valued samples on a SphereGrid (e.g. a support function)."""

    grid: SphereGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.field_shape:
            raise ValueError(f"field shape {v.shape} != grid shape {self.grid.field_shape}")
        if not np.isfinite(v).all():
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)


# --------------------------------------------------------------------------
# S^1 spectral machinery
# --------------------------------------------------------------------------

def fourier_coeffs(values):
    """One-sided Fourier coefficients of uniform circle samples."""
    return np.fft.rfft(values) / len(values)


def fourier_eval(coeffs, theta, deriv=0):
    """Evaluate a trig series (and derivatives) at arbitrary angles."""
    k = np.arange(len(coeffs))
    c = coeffs.copy()
    c[1:-1] *= 2.0
    if deriv % 2 == 1:
        c[-1] = 0.0  # Nyquist mode has no well-defined odd derivative
    ph = np.exp(1j * np.multiply.outer(np.asarray(theta, dtype=float), k))
    return (ph * ((1j * k) ** deriv * c)).sum(axis=-1).real


def _circle_deriv(values, order):
    N = len(values)
    k = np.arange(N // 2 + 1)
    F = np.fft.rfft(values) * (1j * k) ** order
    if order % 2 == 1:
        F[-1] = 0.0
    return np.fft.irfft(F, n=N)


# --------------------------------------------------------------------------
# S^2 finite differences
# --------------------------------------------------------------------------

def _pad_pole(V, n_phi, rows):
    # ghost rows across each pole: f(-theta, phi) = f(theta, phi + pi)
    half = n_phi // 2
    top = np.roll(V[:rows][::-1], half, axis=1)
    bot = np.roll(V[-rows:][::-1], half, axis=1)
    return np.vstack([top, V, bot])


# stencils are written as combinations of node differences so that constant
# fields give exact zeros (no coefficient roundoff at a round body)

def _dtheta(V, n_phi, h, order):
    Vp = _pad_pole(V, n_phi, rows=2)
    if order == 1:
        return (8.0 * (Vp[3:-1] - Vp[1:-3]) - (Vp[4:] - Vp[:-4])) / (12.0 * h)
    c = Vp[2:-2]
    return (16.0 * ((Vp[1:-3] - c) + (Vp[3:-1] - c))
            - ((Vp[:-4] - c) + (Vp[4:] - c))) / (12.0 * h * h)


def _dphi(V, h, order):
    if order == 1:
        return (8.0 * (np.roll(V, -1, 1) - np.roll(V, 1, 1))
                - (np.roll(V, -2, 1) - np.roll(V, 2, 1))) / (12.0 * h)
    return (16.0 * ((np.roll(V, 1, 1) - V) + (np.roll(V, -1, 1) - V))
            - ((np.roll(V, 2, 1) - V) + (np.roll(V, -2, 1) - V))) / (12.0 * h * h)


def _sphere_jet(grid, V):
    """First and second partial derivatives of a field on S^2."""
    f_t = _dtheta(V, grid.resolution[1], grid.h_theta, 1)
    f_tt = _dtheta(V, grid.resolution[1], grid.h_theta, 2)
    f_p = _dphi(V, grid.h_phi, 1)
    f_pp = _dphi(V, grid.h_phi, 2)
    f_tp = _dphi(f_t, grid.h_phi, 1)
    return f_t, f_p, f_tt, f_tp, f_pp


def frame_hessian(grid, values):
    """Covariant Hessian in the orthonormal frame (theta-hat, phi-hat).

    Returns (H11, H12, H22).  Built so that a constant field yields exact
    zeros (all terms are pure differences of equal values).
    """
    if grid.ambient_dim == 2:
        H = _circle_deriv(values, 2)
        return H, None, None
    f_t, f_p, f_tt, f_tp, f_pp = _sphere_jet(grid, values)
    st, ct = grid.sin_t, grid.cos_t
    H11 = f_tt
    H12 = (f_tp - (ct / st) * f_p) / st
    H22 = (f_pp + st * ct * f_t) / (st * st)
    return H11, H12, H22


def covariant_hessian(f: ScalarField):
    """Covariant Hessian in the coordinate frame.

    S^1: array of f_theta_theta.  S^2: array of shape (..., 2, 2) with
    entries (H_tt, H_tp; H_tp, H_pp); the off-diagonal pair is one shared
    value, so symmetry is exact by construction.
    """
    grid = f.grid
    if grid.ambient_dim == 2:
        return _circle_deriv(f.values, 2)
    f_t, f_p, f_tt, f_tp, f_pp = _sphere_jet(grid, f.values)
    st, ct = grid.sin_t, grid.cos_t
    H = np.empty(grid.field_shape + (2, 2))
    H[..., 0, 0] = f_tt
    H[..., 0, 1] = f_tp - (ct / st) * f_p
    H[..., 1, 0] = H[..., 0, 1]
    H[..., 1, 1] = f_pp + st * ct * f_t
    return H


def covariant_gradient(grid, values):
    """Gradient components in the orthonormal frame; (g1,) or (g1, g2)."""
    if grid.ambient_dim == 2:
        return (_circle_deriv(values, 1),)
    f_t = _dtheta(values, grid.resolution[1], grid.h_theta, 1)
    f_p = _dphi(values, grid.h_phi, 1)
    return f_t, f_p / grid.sin_t


def covariant_gradient_normsq(f: ScalarField):
    """|grad f|^2 with respect to the round metric."""
    comps = covariant_gradient(f.grid, f.values)
    out = comps[0] ** 2
    for c in comps[1:]:
        out = out + c ** 2
    return out


def integrate(f: ScalarField):
    """Quadrature of the field over S^{n-1} (fixed summation order)."""
    return float(np.sum(f.values * f.grid.quad_weights))


def apply_polar_filter(grid, values):
    """Remove azimuthal modes a latitude row cannot resolve (S^2 only).

    Explicit time stepping with dt ~ min(h_theta, h_phi)^2 is unstable for
    high-phi wavenumbers near the poles; for smooth fields those modes are
    below roundoff anyway, so truncating them costs ~sin(theta)^(m+1) per
    row.  No-op on S^1.
    """
    if grid.ambient_dim == 2:
        return values
    F = np.fft.rfft(values, axis=1)
    return np.fft.irfft(F * grid.phi_mode_mask, n=grid.resolution[1], axis=1)


# --------------------------------------------------------------------------
# off-grid evaluation
# --------------------------------------------------------------------------

def wrap_sphere_coords(theta, phi):
    """Map arbitrary (theta, phi) to the principal chart via sphere symmetry."""
    theta = np.mod(theta, 2.0 * np.pi)
    flip = theta > np.pi
    theta = np.where(flip, 2.0 * np.pi - theta, theta)
    phi = np.where(flip, phi + np.pi, phi)
    return theta, np.mod(phi, 2.0 * np.pi)


class FieldSampler:
    """Evaluate a grid field at arbitrary points of the sphere.

    S^1 fields are evaluated through their trigonometric interpolant
    (spectral accuracy); S^2 fields through a bicubic spline on the grid
    padded with pole-reflected rows and periodic columns (O(h^4)).
    """

    def __init__(self, grid, values, pad=3):
        self.grid = grid
        if grid.ambient_dim == 2:
            self._coeffs = fourier_coeffs(values)
        else:
            Nt, Np = grid.resolution
            rows = cols = pad
            Vp = _pad_pole(values, Np, rows=rows)
            thp = np.concatenate([-grid.theta[:rows][::-1], grid.theta,
                                  2.0 * np.pi - grid.theta[-rows:][::-1]])
            Vp = np.hstack([Vp[:, -cols:], Vp, Vp[:, :cols]])
            php = np.concatenate([grid.phi[-cols:] - 2.0 * np.pi, grid.phi,
                                  grid.phi[:cols] + 2.0 * np.pi])
            self._spline = RectBivariateSpline(thp, php, Vp, kx=3, ky=3, s=0)

    def at_angles(self, theta, phi=None):
        if self.grid.ambient_dim == 2:
            return fourier_eval(self._coeffs, theta)
        th, ph = wrap_sphere_coords(np.asarray(theta, float), np.asarray(phi, float))
        return self._spline.ev(th.ravel(), ph.ravel()).reshape(np.shape(theta))

    def at_directions(self, u):
        """Evaluate at unit vectors u of shape (..., n)."""
        u = np.asarray(u, dtype=float)
        if self.grid.ambient_dim == 2:
            return self.at_angles(np.arctan2(u[..., 1], u[..., 0]))
        theta = np.arccos(np.clip(u[..., 2], -1.0, 1.0))
        phi = np.arctan2(u[..., 1], u[..., 0])
        return self.at_angles(theta, phi)
