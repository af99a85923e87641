import io

import numpy as np
import pytest
from scipy.integrate import quad

from sqglab.constants import FracParams, riesz_constant
from sqglab.plasma import (
    GridSpec,
    clustered_grid,
    diagnostics,
    dilation_identity_residual,
    evaluate_W,
    evaluate_W_derivative,
    mode_quadrature_weights,
    power_grid,
    profile_to_csv,
    radial_mode_kernel,
    solve_ground_state,
)


def kernel_by_quadrature(r, rho, s, m):
    """Adaptive angular quadrature oracle for the mode kernel."""
    nu = 1.0 - s

    def integrand(t):
        return np.cos(m * t) * (r * r + rho * rho - 2 * r * rho * np.cos(t)) ** (-nu)

    val, _ = quad(integrand, 0.0, 2.0 * np.pi, limit=400)
    return riesz_constant(FracParams(s=s)) * rho * val


class TestModeKernel:
    def test_vanishes_at_origin_for_positive_modes(self):
        for m in (1, 2, 5):
            assert radial_mode_kernel(0.0, 2.3, 0.37, m) == 0.0

    def test_mode_zero_at_origin(self):
        # K_0(0, rho) = 2 pi c_{2,s} rho^{2s-1}; identically 1 at s = 1/2
        for rho in (0.3, 1.0, 4.2):
            assert radial_mode_kernel(0.0, rho, 0.5, 0) == pytest.approx(1.0, rel=1e-13)
        s = 0.3
        expected = 2 * np.pi * riesz_constant(FracParams(s=s)) * 1.7 ** (2 * s - 1)
        assert radial_mode_kernel(0.0, 1.7, s, 0) == pytest.approx(expected, rel=1e-13)

    def test_closed_form_matches_quadrature(self, rng):
        for _ in range(30):
            s = rng.uniform(0.15, 0.9)
            m = int(rng.integers(0, 7))
            r = rng.uniform(0.05, 4.0)
            rho = rng.uniform(0.05, 4.0)
            if abs(r - rho) < 1e-3 * max(r, rho):
                rho *= 1.1
            got = radial_mode_kernel(r, rho, s, m)
            want = kernel_by_quadrature(r, rho, s, m)
            assert got == pytest.approx(want, rel=1e-8, abs=1e-12)

    def test_symmetry_identity(self, rng):
        # K_m(r, rho)/rho = K_m(rho, r)/r
        for _ in range(20):
            s = rng.uniform(0.15, 0.9)
            m = int(rng.integers(0, 5))
            r, rho = rng.uniform(0.1, 5.0, 2)
            a = radial_mode_kernel(r, rho, s, m) / rho
            b = radial_mode_kernel(rho, r, s, m) / r
            assert a == pytest.approx(b, rel=1e-10)

    def test_against_cartesian_potential(self):
        # 2-D midpoint quadrature of the Riesz potential of a compact source
        s = 0.5
        n = 500
        h = 2.0 / n
        axis = -1.0 + h * (np.arange(n) + 0.5)
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        R2 = X * X + Y * Y
        source = np.clip(1.0 - R2, 0.0, None) ** 2
        c = riesz_constant(FracParams(s=s))
        for r_t in (1.5, 2.5):
            cart = c * h * h * np.sum(source / np.hypot(X - r_t, Y) ** (2 - 2 * s))
            radial, _ = quad(
                lambda rho: radial_mode_kernel(r_t, rho, s, 0)
                * np.clip(1 - rho * rho, 0.0, None) ** 2,
                0.0,
                1.0,
                limit=200,
            )
            assert radial == pytest.approx(cart, abs=1e-4)

    def test_diagonal_finite_part(self):
        # for s > 1/2 the diagonal value is the true limit of the kernel
        s, r = 0.75, 1.3
        direct = kernel_by_quadrature(r, r, s, 1)
        assert radial_mode_kernel(r, r, s, 1) == pytest.approx(direct, rel=1e-8)
        # for s <= 1/2 the angular integral diverges; the subtraction value
        # is finite by definition
        assert np.isfinite(radial_mode_kernel(r, r, 0.5, 0))
        assert np.isfinite(radial_mode_kernel(r, r, 0.3, 2))

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            radial_mode_kernel(1.0, 1.0, 0.5, -1)
        with pytest.raises(ValueError):
            radial_mode_kernel(np.nan, 1.0, 0.5, 0)


class TestQuadratureWeights:
    def test_riesz_identity_on_power_grid(self):
        # (-Lap)^{-1/2} (1+r^2)^{-3/2} = (1+r^2)^{-1/2} in the plane; the
        # mismatch is dominated by the truncated far tail
        g = power_grid(400, 40.0)
        Q = mode_quadrature_weights(g, 0.5, 0, order=3)
        err = np.abs(Q @ (1 + g * g) ** -1.5 - (1 + g * g) ** -0.5)
        assert err.max() < 5e-4

    def test_sharp_peak_on_clustered_grid(self):
        # rescaled identity: source A(1+(r/a)^2)^{-3/2} has potential
        # A a (1+(r/a)^2)^{-1/2}
        A, a = 500.0, 0.135
        g = clustered_grid(400, 40.0, 0.266)
        Q = mode_quadrature_weights(g, 0.5, 0, order=3)
        tail = A * a**3 / (2 * 40.0**2)
        got = Q @ (A * (1 + (g / a) ** 2) ** -1.5) + tail
        err = np.abs(got - A * a / np.sqrt(1 + (g / a) ** 2))
        assert err.max() < 5e-4

    def test_hat_weights_nonnegative(self):
        g = clustered_grid(120, 10.0, 0.4)
        Q = mode_quadrature_weights(g, 0.5, 1, order=1)
        assert Q.min() >= 0.0

    def test_positive_source_gives_decreasing_potential(self):
        # maximum-principle surrogate
        g = clustered_grid(160, 20.0, 0.8)
        Q = mode_quadrature_weights(g, 0.6, 0, order=1)
        pot = Q @ (np.clip(1.0 - (g / 1.5) ** 2, 0.0, None) ** 2)
        assert np.all(pot > 0.0)
        assert np.all(np.diff(pot) < 0.0)


class TestGroundState:
    def test_profile_shape(self, profile_s05):
        W = profile_s05.values
        assert np.all(np.diff(W) < 0.0)
        assert W[0] > 1.0 > W[-1] > 0.0
        assert profile_s05.residual_norm < 1e-9

    def test_known_scale(self, profile_s05):
        # frozen from the converged discretization study
        assert profile_s05.values[0] == pytest.approx(13.085, abs=0.01)
        assert profile_s05.R0 == pytest.approx(0.2664, abs=0.002)
        assert profile_s05.Mgamma == pytest.approx(1.6576, abs=0.005)

    def test_discrete_equation_residual(self, profile_s05):
        g = profile_s05.nodes
        Q = mode_quadrature_weights(g, 0.5, 0, order=3)
        res = np.abs(profile_s05.values - Q @ profile_s05.source()).max()
        assert res < 1e-9

    def test_gamma_window_enforced(self):
        with pytest.raises(ValueError):
            solve_ground_state(FracParams(s=0.5, gamma=3.2), GridSpec(n_cells=64))

    def test_custom_rmax_respected(self, profile_s05):
        assert profile_s05.r_max == 40.0

    def test_adaptive_rmax_covers_far_field(self, profile_s075):
        assert profile_s075.r_max >= 55.0 * profile_s075.R0


class TestDiagnostics:
    def test_far_field_ratios(self, profile_s05):
        diag = diagnostics(profile_s05)
        r = 50.0 * diag.R0
        assert abs(float(diag.tail_ratio(r)) - 1.0) < 0.02
        assert abs(float(diag.derivative_tail_ratio(r)) - 1.0) < 0.05
        assert diag.Mgamma > 0.0

    def test_consistent_with_profile_fields(self, profile_s05):
        diag = diagnostics(profile_s05)
        assert diag.R0 == pytest.approx(profile_s05.R0, rel=1e-10)
        assert diag.Mgamma == pytest.approx(profile_s05.Mgamma, rel=1e-10)

    def test_dict_layout(self, profile_s05):
        doc = diagnostics(profile_s05).to_dict()
        assert list(doc) == ["s", "gamma", "R0", "Mgamma", "tail_ratio_at"]
        assert len(doc["tail_ratio_at"]) == 4

    def test_not_crossing_error(self, profile_s05):
        from dataclasses import replace

        fake = replace(profile_s05, values=profile_s05.values + 10.0, _interp=None, _dinterp=None)
        with pytest.raises(Exception):
            diagnostics(fake)


class TestEvaluate:
    def test_reproduces_nodes(self, profile_s05):
        idx = [0, 7, 100, 399, 400]
        assert np.allclose(
            evaluate_W(profile_s05, profile_s05.nodes[idx]), profile_s05.values[idx]
        )

    def test_continuity_at_rmax(self, profile_s05):
        r = profile_s05.r_max
        inner = evaluate_W(profile_s05, r * (1 - 1e-9))
        outer = evaluate_W(profile_s05, r * (1 + 1e-9))
        assert abs(inner - outer) < 1e-6

    def test_tail_formula_beyond_grid(self, profile_s05):
        s = profile_s05.params.s
        r = 3.0 * profile_s05.r_max
        expected = profile_s05.tail_coeff * r ** (-(2 - 2 * s))
        assert evaluate_W(profile_s05, r) == pytest.approx(expected, rel=1e-13)
        dexp = profile_s05.tail_coeff * (-(2 - 2 * s)) * r ** (-(2 - 2 * s) - 1)
        assert evaluate_W_derivative(profile_s05, r) == pytest.approx(dexp, rel=1e-13)

    def test_negative_radius_error(self, profile_s05):
        with pytest.raises(ValueError):
            evaluate_W(profile_s05, -0.1)


class TestInvarianceAndExport:
    def test_dilation_identity(self, profile_s05):
        # transformed-profile residual at lambda = 2, to discretization level
        assert dilation_identity_residual(profile_s05, 2.0) < 0.01

    def test_csv_export(self, profile_s05):
        buf = io.StringIO()
        profile_to_csv(profile_s05, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "r,W,source"
        assert len(lines) == len(profile_s05.nodes) + 1
        r0, w0, f0 = (float(v) for v in lines[1].split(","))
        assert r0 == 0.0
        assert w0 == pytest.approx(profile_s05.values[0], rel=1e-10)
        assert f0 == pytest.approx((w0 - 1.0) ** 2.5, rel=1e-9)
