"""Closed-form support functions for the initial body families.

All families are evaluated analytically at the grid nodes so initial data
are resolution-independent.
"""

from __future__ import annotations

import numpy as np
from scipy.special import lpmv

from .sphere import ScalarField, SphereGrid


def ball_support(grid: SphereGrid, radius: float) -> ScalarField:
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    return ScalarField(grid, np.full(grid.field_shape, float(radius)))


def translated_ball_support(grid: SphereGrid, radius: float, center) -> ScalarField:
    """Ball of given radius centered at `center`; needs |center| < radius."""
    c = np.asarray(center, dtype=float)
    if c.shape != (grid.ambient_dim,):
        raise ValueError(f"center must have {grid.ambient_dim} components")
    if np.linalg.norm(c) >= radius:
        raise ValueError("origin must be interior: |center| < radius")
    return ScalarField(grid, radius + grid.nodes @ c)


def ellipsoid_support(grid: SphereGrid, semi_axes) -> ScalarField:
    """Axis-aligned ellipsoid sum (x_i/a_i)^2 <= 1: s(z) = sqrt(sum a_i^2 z_i^2)."""
    a = np.asarray(semi_axes, dtype=float)
    if a.shape != (grid.ambient_dim,) or (a <= 0).any():
        raise ValueError(f"need {grid.ambient_dim} positive semi-axes")
    return ScalarField(grid, np.sqrt((grid.nodes ** 2 * a ** 2).sum(axis=-1)))


def ellipsoid_radial_oracle(grid: SphereGrid, semi_axes) -> np.ndarray:
    """Exact radial function of the axis-aligned ellipsoid at the grid nodes."""
    a = np.asarray(semi_axes, dtype=float)
    return 1.0 / np.sqrt((grid.nodes ** 2 / a ** 2).sum(axis=-1))


def harmonic_support(grid: SphereGrid, base_radius: float, modes) -> ScalarField:
    """Round body perturbed by angular harmonics.

    `modes` is a list of (l, amplitude) for S^1 (cos(l theta) terms) or
    (l, m, amplitude) for S^2 (P_l^m(cos theta) cos(m phi) terms).
    """
    vals = np.full(grid.field_shape, float(base_radius))
    if grid.ambient_dim == 2:
        for l, amp in modes:
            vals = vals + amp * np.cos(int(l) * grid.theta)
    else:
        TH = np.arccos(np.clip(grid.nodes[..., 2], -1.0, 1.0))
        PH = np.arctan2(grid.nodes[..., 1], grid.nodes[..., 0])
        for l, m, amp in modes:
            vals = vals + amp * lpmv(int(m), int(l), np.cos(TH)) * np.cos(int(m) * PH)
    return ScalarField(grid, vals)
