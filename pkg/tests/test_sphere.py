"""Grid construction, covariant calculus and quadrature on S^1 and S^2."""

import numpy as np
import pytest

from gaussflow.sphere import (ConfigurationError, FieldSampler, ScalarField,
                              apply_polar_filter, build_grid, covariant_gradient_normsq,
                              covariant_hessian, integrate)


def field(grid, values):
    return ScalarField(grid, values)


class TestBuildGrid:
    def test_circle_nodes_and_weights(self):
        g = build_grid(2, 16)
        assert np.allclose(g.theta, np.arange(16) * 2 * np.pi / 16)
        assert np.allclose(g.quad_weights, 2 * np.pi / 16)
        assert abs(g.quad_weights.sum() - 2 * np.pi) < 1e-12

    def test_unit_nodes(self):
        for g in (build_grid(2, 64), build_grid(3, (16, 32))):
            norms = np.linalg.norm(g.nodes, axis=-1)
            assert np.abs(norms - 1.0).max() < 1e-14

    def test_sphere_weights_normalized(self):
        g = build_grid(3, (16, 32))
        assert abs(g.quad_weights.sum() - 4 * np.pi) < 1e-12 * 4 * np.pi

    def test_sphere_shifted_poles(self):
        g = build_grid(3, (16, 32))
        assert g.theta.min() > 0 and g.theta.max() < np.pi
        assert np.allclose(g.theta, (np.arange(16) + 0.5) * np.pi / 16)

    @pytest.mark.parametrize("n,res", [
        (4, (16,)), (1, (16,)), (2, (8,)), (2, (17,)),
        (3, (8, 32)), (3, (16, 16)), (3, (16, 33)),
    ])
    def test_rejects_bad_resolutions(self, n, res):
        with pytest.raises(ConfigurationError):
            build_grid(n, res)

    def test_antipodal_map(self):
        for g in (build_grid(2, 32), build_grid(3, (16, 32))):
            f = g.nodes @ np.arange(1.0, g.ambient_dim + 1)
            assert np.abs(g.antipodal(f) + f).max() < 1e-14


class TestHessian:
    def test_constant_is_exactly_zero(self):
        for g in (build_grid(2, 64), build_grid(3, (16, 32))):
            H = covariant_hessian(field(g, np.full(g.field_shape, 3.7)))
            assert np.abs(H).max() == 0.0

    def test_circle_cosine(self):
        g = build_grid(2, 256)
        H = covariant_hessian(field(g, np.cos(g.theta)))
        assert np.abs(H + np.cos(g.theta)).max() < 1e-10

    def test_linear_restriction_identity(self):
        # restriction of <v, z> satisfies Hess f = -f g
        g = build_grid(3, (32, 64))
        v = np.array([0.3, -0.4, 0.5])
        f = g.nodes @ v
        H = covariant_hessian(field(g, f))
        TH = np.arccos(np.clip(g.nodes[..., 2], -1, 1))
        gmat = np.zeros(g.field_shape + (2, 2))
        gmat[..., 0, 0] = 1.0
        gmat[..., 1, 1] = np.sin(TH) ** 2
        err = np.abs(H + f[..., None, None] * gmat).max()
        assert err < 5e-5

    def test_symmetry_exact(self):
        g = build_grid(3, (16, 32))
        rng = np.random.default_rng(0)
        v = rng.normal(size=3)
        H = covariant_hessian(field(g, np.exp(g.nodes @ v)))
        assert np.array_equal(H[..., 0, 1], H[..., 1, 0])

    def test_second_order_convergence(self):
        # spec requires halving h to cut the max error by >= 3.5
        v = np.array([0.3, -0.4, 0.5])

        def err(nt, np_):
            g = build_grid(3, (nt, np_))
            f = np.exp(g.nodes @ v)
            H = covariant_hessian(field(g, f))
            TH = np.arccos(np.clip(g.nodes[..., 2], -1, 1))
            e_t = np.stack([np.cos(TH) * g.nodes[..., 0] / np.sin(TH),
                            np.cos(TH) * g.nodes[..., 1] / np.sin(TH),
                            -np.sin(TH)], axis=-1)
            vt1 = e_t @ v
            exact_tt = f * (vt1 * vt1 - g.nodes @ v)
            return np.abs(H[..., 0, 0] - exact_tt).max()

        assert err(16, 32) / err(32, 64) >= 3.5

    def test_degree_two_harmonic_spectral(self):
        g = build_grid(2, 64)
        H = covariant_hessian(field(g, np.cos(2 * g.theta)))
        assert np.abs(H + 4 * np.cos(2 * g.theta)).max() < 1e-10


class TestGradient:
    def test_constant(self):
        g = build_grid(3, (16, 32))
        gr = covariant_gradient_normsq(field(g, np.full(g.field_shape, 2.0)))
        assert np.abs(gr).max() == 0.0

    def test_circle_sine(self):
        g = build_grid(2, 128)
        gr = covariant_gradient_normsq(field(g, np.sin(g.theta)))
        assert np.abs(gr - np.cos(g.theta) ** 2).max() < 1e-12

    def test_linear_tangential_norm(self):
        # |grad <v,z>|^2 = 1 - <v,z>^2 for unit v
        v = np.array([1.0, 2.0, -1.0])
        v /= np.linalg.norm(v)
        g = build_grid(3, (32, 64))
        f = g.nodes @ v
        gr = covariant_gradient_normsq(field(g, f))
        assert np.abs(gr - (1 - f ** 2)).max() < 2e-5


class TestIntegrate:
    def test_unit_areas(self):
        assert abs(integrate(field(build_grid(2, 32), np.ones(32))) - 2 * np.pi) < 1e-13
        g3 = build_grid(3, (16, 32))
        assert abs(integrate(field(g3, np.ones(g3.field_shape))) - 4 * np.pi) < 1e-12

    def test_odd_function_cancels(self):
        g = build_grid(3, (16, 32))
        f = g.nodes @ np.array([1.0, -2.0, 0.5])
        assert abs(integrate(field(g, f ** 3))) < 1e-12

    def test_cos_theta_zero(self):
        g = build_grid(3, (16, 32))
        assert abs(integrate(field(g, g.nodes[..., 2]))) < 1e-12

    def test_smooth_oracle(self):
        # independent oracle: int_{S^2} exp(<v,z>) = 4 pi sinh(|v|)/|v|
        g = build_grid(3, (64, 128))
        v = np.array([0.2, 0.3, -0.4])
        r = np.linalg.norm(v)
        exact = 4 * np.pi * np.sinh(r) / r
        got = integrate(field(g, np.exp(g.nodes @ v)))
        assert abs(got - exact) / exact < 5e-5


class TestPolarFilter:
    def test_circle_noop(self):
        g = build_grid(2, 32)
        x = np.random.default_rng(1).normal(size=32)
        assert np.array_equal(apply_polar_filter(g, x), x)

    def test_low_modes_preserved(self):
        g = build_grid(3, (32, 64))
        PH = np.arctan2(g.nodes[..., 1], g.nodes[..., 0])
        f = 1.0 + 0.3 * g.nodes[..., 0]  # m=1 content only
        assert np.abs(apply_polar_filter(g, f) - f).max() < 1e-13
        f2 = np.cos(PH)  # m=1 regardless of latitude
        assert np.abs(apply_polar_filter(g, f2) - f2).max() < 1e-13

    def test_high_modes_removed_near_pole(self):
        g = build_grid(3, (32, 64))
        PH = np.arctan2(g.nodes[..., 1], g.nodes[..., 0])
        f = np.cos(12 * PH)
        out = apply_polar_filter(g, f)
        assert np.abs(out[0]).max() < 1e-13          # polar row loses m=12
        assert np.abs(out[16] - f[16]).max() < 1e-13  # equatorial row keeps it


class TestFieldSampler:
    def test_circle_spectral(self):
        g = build_grid(2, 64)
        f = np.cos(3 * g.theta) + 0.5 * np.sin(g.theta)
        smp = FieldSampler(g, f)
        th = np.linspace(0, 2 * np.pi, 37)
        assert np.abs(smp.at_angles(th) - (np.cos(3 * th) + 0.5 * np.sin(th))).max() < 1e-12

    def test_sphere_offgrid(self):
        g = build_grid(3, (32, 64))
        v = np.array([0.2, -0.1, 0.4])
        smp = FieldSampler(g, np.exp(g.nodes @ v))
        rng = np.random.default_rng(3)
        u = rng.normal(size=(100, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        assert np.abs(smp.at_directions(u) - np.exp(u @ v)).max() < 2e-6
