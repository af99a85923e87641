import math

import numpy as np
import pytest

from sqglab.constants import (
    FracParams,
    gamma_fn,
    interaction_constant,
    pair_energy_constant,
    perp,
    riesz_constant,
    riesz_point_gradient_perp,
)


class TestGamma:
    def test_half_integer_values(self):
        assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)
        assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
        assert gamma_fn(1.5) == pytest.approx(0.5 * math.sqrt(math.pi), rel=1e-14)
        assert gamma_fn(4.0) == pytest.approx(6.0, rel=1e-14)

    def test_against_stdlib_on_0_30(self):
        # independent oracle: math.gamma
        x = np.linspace(0.01, 30.0, 1777)
        ours = gamma_fn(x)
        ref = np.array([math.gamma(v) for v in x])
        assert np.max(np.abs(ours / ref - 1.0)) < 1e-12

    def test_recurrence_property(self):
        x = np.linspace(0.1, 20.0, 1000)
        lhs = gamma_fn(x + 1.0)
        rhs = x * gamma_fn(x)
        assert np.max(np.abs(lhs / rhs - 1.0)) < 1e-11

    @pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, np.nan])
    def test_domain_error(self, bad):
        with pytest.raises(ValueError):
            gamma_fn(bad)


class TestRieszConstant:
    def test_known_values(self):
        assert riesz_constant(FracParams(s=0.5)) == pytest.approx(1.0 / (2 * np.pi), rel=1e-12)
        assert riesz_constant(FracParams(s=0.25)) == pytest.approx(0.076075, abs=1e-5)
        assert riesz_constant(FracParams(s=0.5, n=3)) == pytest.approx(
            1.0 / (2 * np.pi**2), rel=1e-12
        )

    def test_positive_on_range(self):
        for s in np.linspace(0.05, 0.95, 19):
            assert riesz_constant(FracParams(s=s)) > 0.0

    def test_domain_error(self):
        # the s-range check lives on FracParams construction
        with pytest.raises(ValueError):
            FracParams(s=1.2)
        with pytest.raises(ValueError):
            FracParams(s=0.0)


class TestInteractionConstant:
    def test_euler_value(self):
        assert interaction_constant(1.0) == pytest.approx(1.0 / (2 * np.pi), rel=1e-12)

    def test_sqg_value(self):
        # Gamma(3/2)/(pi Gamma(1/2)) = 1/(2 pi)
        assert interaction_constant(0.5) == pytest.approx(1.0 / (2 * np.pi), rel=1e-12)

    def test_intermediate_value(self):
        assert interaction_constant(0.75) == pytest.approx(0.166483968, rel=1e-8)

    def test_euler_limit_continuity(self):
        assert abs(interaction_constant(0.999) - 1.0 / (2 * np.pi)) < 1e-3

    def test_identity_with_riesz_constant(self):
        # K(s) = (2-2s) c_{2,s}: a unit test, deliberately not the
        # implementation path (it cancels near s = 1)
        for s in np.linspace(0.05, 0.95, 10):
            assert interaction_constant(s) == pytest.approx(
                (2.0 - 2.0 * s) * riesz_constant(FracParams(s=s)), rel=1e-11
            )

    def test_pair_energy_constant_relation(self):
        for s in np.linspace(0.1, 0.9, 9):
            assert pair_energy_constant(s) == pytest.approx(
                interaction_constant(s) / (2.0 - 2.0 * s), rel=1e-12
            )

    def test_domain_error(self):
        with pytest.raises(ValueError):
            interaction_constant(0.0)
        with pytest.raises(ValueError):
            interaction_constant(1.5)


class TestPointGradient:
    def test_reproduces_interaction_term(self, rng):
        # velocity contribution of vortex i at x: m_i grad^perp G_s(x - xi_i)
        # must equal m_i K(s) (xi_i - x)^perp / |xi_i - x|^{4-2s}
        for _ in range(100):
            s = rng.uniform(0.05, 0.999)
            z = rng.normal(size=2) * rng.uniform(0.1, 5.0)
            got = riesz_point_gradient_perp(s, z)
            want = interaction_constant(s) * perp(-z) / np.linalg.norm(z) ** (4 - 2 * s)
            assert np.allclose(got, want, rtol=1e-12, atol=1e-15)

    def test_odd_symmetry(self, rng):
        z = rng.normal(size=(20, 2))
        assert np.allclose(
            riesz_point_gradient_perp(0.4, z), -riesz_point_gradient_perp(0.4, -z)
        )

    def test_homogeneity(self, rng):
        for _ in range(20):
            s = rng.uniform(0.1, 0.95)
            z = rng.normal(size=2)
            mag = np.linalg.norm(riesz_point_gradient_perp(s, z))
            assert mag == pytest.approx(
                interaction_constant(s) * np.linalg.norm(z) ** (2 * s - 3), rel=1e-12
            )

    def test_singularity_error(self):
        with pytest.raises(ValueError):
            riesz_point_gradient_perp(0.5, np.zeros(2))

    def test_two_vortex_field_divergence_free(self):
        # central-difference divergence of the induced velocity field
        s = 0.6
        sources = np.array([[0.7, 0.0], [-0.7, 0.2]])
        weights = np.array([1.0, -0.8])

        def u(x):
            out = np.zeros(2)
            for xi, m in zip(sources, weights):
                out += m * riesz_point_gradient_perp(s, x - xi)
            return out

        h = 1e-5
        probes = [np.array([1.5, 1.1]), np.array([-0.2, 1.4]), np.array([2.2, -0.6])]
        for x in probes:
            assert min(np.linalg.norm(x - xi) for xi in sources) >= 0.5
            div = (u(x + [h, 0])[0] - u(x - [h, 0])[0] + u(x + [0, h])[1] - u(x - [0, h])[1]) / (
                2 * h
            )
            assert abs(div) < 1e-6


class TestFracParams:
    def test_gamma_window(self):
        FracParams(s=0.5, gamma=2.5).require_plasma()
        with pytest.raises(ValueError):
            FracParams(s=0.5, gamma=3.5).require_plasma()
        with pytest.raises(ValueError):
            FracParams(s=0.5, gamma=0.5).require_plasma()
        with pytest.raises(ValueError):
            FracParams(s=0.5).require_plasma()

    def test_degenerate_exponent_rejected(self):
        # gamma = 1/(1-s)
        with pytest.raises(ValueError):
            FracParams(s=0.5, gamma=2.0).require_mass_exponent()
        assert FracParams(s=0.4, gamma=2.0).require_mass_exponent() == pytest.approx(0.4)
