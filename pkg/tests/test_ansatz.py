import io

import numpy as np
import pytest

from sqglab.ansatz import (
    AnsatzParams,
    balancing_residual_multi,
    build_psi0,
    error_field,
    error_field_to_csv,
    fit_linear_coefficient,
    lambda_solve,
    mu_from_mass,
    pair_ansatz,
    reduced_function,
    reduced_root,
    reduced_speed_coefficient,
    scaling_study,
)
from sqglab.constants import FracParams, interaction_constant, perp
from sqglab.equilibria import pair_speed, six_vortex_seed, traveling_residual
from sqglab.plasma import evaluate_W
from sqglab.pointvortex import VortexConfig


class TestMu:
    def test_unit_ratio(self):
        assert mu_from_mass(2.5, FracParams(s=0.4, gamma=2.0), 2.5) == 1.0

    def test_arithmetic_example(self):
        # exponent 2(1 - 0.4*2/1) = 0.4, so mu = 2^{1/0.4} = 2^{2.5}
        got = mu_from_mass(2.0, FracParams(s=0.4, gamma=2.0), 1.0)
        assert got == pytest.approx(2.0**2.5, rel=1e-12)

    def test_degenerate_exponent(self):
        with pytest.raises(ValueError):
            mu_from_mass(1.0, FracParams(s=0.5, gamma=2.0), 1.0)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            mu_from_mass(0.0, FracParams(s=0.4, gamma=2.0), 1.0)
        with pytest.raises(ValueError):
            mu_from_mass(1.0, FracParams(s=0.4, gamma=2.0), -1.0)


class TestLambda:
    def test_single_vortex_exact(self, profile_s05):
        cfg = VortexConfig([[0.0, 0.0]], [1.0], 0.5)
        mu = mu_from_mass(1.0, profile_s05.params, profile_s05.Mgamma)
        params = AnsatzParams(
            config=cfg, eps=1e-3, mu=[mu], c=0.0, delta=0.5, profile=profile_s05
        )
        lam = lambda_solve(params)
        assert lam[0] == pytest.approx(mu ** (-params.scale_exponent), rel=1e-14)

    def test_pair_relation(self, profile_s05):
        # direct substitution into the pair threshold relation:
        # mu^a lam = 1 - W(2d/(eps mu)) + c eps^{2-2s} mu^a d
        d, m, s = 1.0, 1.0, 0.5
        c = pair_speed(d, m, s)
        params = pair_ansatz(profile_s05, d, m, c, 1e-4)
        lam = lambda_solve(params)
        a = params.scale_exponent
        mu = params.mu[0]
        rhs = 1.0 - evaluate_W(profile_s05, 2 * d / (params.eps * mu)) + c * params.eps ** (
            2 - 2 * s
        ) * mu**a * d
        assert mu**a * lam[0] == pytest.approx(rhs, abs=1e-12)
        # the anti-vortex carries the mirrored value
        assert lam[1] == pytest.approx(lam[0], rel=1e-12)

    def test_small_eps_limit_rate(self, profile_s05):
        # lambda_l - mu_l^{-a} = O(eps^{2-2s}): fit the log-log slope
        d, m, s = 1.0, 1.0, 0.5
        c = pair_speed(d, m, s)
        eps_list = [1e-2, 1e-3, 1e-4]
        devs = []
        for eps in eps_list:
            params = pair_ansatz(profile_s05, d, m, c, eps)
            lam = lambda_solve(params)
            devs.append(abs(lam[0] - params.mu[0] ** (-params.scale_exponent)))
        slope = np.polyfit(np.log(eps_list), np.log(devs), 1)[0]
        assert abs(slope - (2 - 2 * s)) < 0.15

    def test_invalid_configuration_rejected(self, profile_s05):
        # a huge opposing tail drives lambda negative
        cfg = VortexConfig([[0.05, 0.0], [-0.05, 0.0]], [1e-4, -1e4], 0.5)
        mu = [
            mu_from_mass(1e-4, profile_s05.params, profile_s05.Mgamma),
            mu_from_mass(1e4, profile_s05.params, profile_s05.Mgamma),
        ]
        params = AnsatzParams(
            config=cfg, eps=1e-3, mu=mu, c=0.0, delta=0.04, profile=profile_s05
        )
        with pytest.raises(ValueError):
            lambda_solve(params)


class TestPsi0:
    def test_pair_symmetries(self, profile_s05):
        params = pair_ansatz(profile_s05, 1.0, 1.0, pair_speed(1.0, 1.0, 0.5), 1e-3)
        pts = np.array([[0.3, 0.2], [1.4, -0.7], [0.05, 1.1]])
        base = build_psi0(pts, params)
        flipped_x = build_psi0(pts * np.array([-1.0, 1.0]), params)
        flipped_y = build_psi0(pts * np.array([1.0, -1.0]), params)
        assert np.allclose(flipped_x, -base, atol=1e-15)
        assert np.allclose(flipped_y, base, atol=1e-15)

    def test_far_field_decay_coefficient(self, profile_s05):
        # single blob: psi0 ~ eps^{2s-2} mu^{-a} tail_coeff (r/(eps mu))^{-(2-2s)}
        cfg = VortexConfig([[0.0, 0.0]], [1.0], 0.5)
        mu = mu_from_mass(1.0, profile_s05.params, profile_s05.Mgamma)
        eps = 1e-3
        params = AnsatzParams(
            config=cfg, eps=eps, mu=[mu], c=0.0, delta=0.5, profile=profile_s05
        )
        r = 80.0
        a = params.scale_exponent
        predicted = (
            eps ** (2 * 0.5 - 2)
            * mu ** (-a)
            * profile_s05.tail_coeff
            * (r / (eps * mu)) ** (-(2 - 2 * 0.5))
        )
        got = build_psi0(np.array([[r, 0.0]]), params)[0]
        assert got == pytest.approx(predicted, rel=1e-10)


class TestErrorField:
    def test_support_confined(self, profile_s05):
        params = pair_ansatz(
            profile_s05, 1.0, 1.0, -pair_speed(1.0, 1.0, 0.5), 1e-3
        )
        field = error_field(params)
        R = np.hypot(field.y1_offsets[:, None], field.y2_offsets[None, :])
        outside = R > 1.05 * profile_s05.R0
        assert np.abs(field.values[outside]).max() < 1e-12

    def test_halving_eps_quarters_sup(self, profile_s05):
        c = -pair_speed(1.0, profile_s05.Mgamma, 0.5)
        sups = []
        for eps in (2e-3, 1e-3):
            field = error_field(pair_ansatz(profile_s05, 1.0, profile_s05.Mgamma, c, eps))
            sups.append(field.sup)
        ratio = sups[0] / sups[1]
        assert 4.0 * 0.8 < ratio < 4.0 * 1.2

    def test_exact_single_blob_has_zero_error(self, profile_s05):
        cfg = VortexConfig([[0.0, 0.0]], [1.0], 0.5)
        mu = mu_from_mass(1.0, profile_s05.params, profile_s05.Mgamma)
        params = AnsatzParams(
            config=cfg, eps=1e-3, mu=[mu], c=0.0, delta=0.5, profile=profile_s05
        )
        assert error_field(params).sup == 0.0

    def test_grid_must_stay_inside_cutoff(self, profile_s05):
        params = pair_ansatz(profile_s05, 1.0, 1.0, 0.0, 1e-2, delta=0.2)
        too_wide = params.delta / (params.eps * params.mu[0])
        with pytest.raises(ValueError):
            error_field(params, halfwidth=too_wide)

    def test_relabeling_invariance(self, profile_s05):
        c = pair_speed(1.0, 1.0, 0.5)
        params = pair_ansatz(profile_s05, 1.0, 1.0, c, 1e-3)
        swapped_cfg = VortexConfig(
            params.config.positions[::-1], params.config.intensities[::-1], 0.5
        )
        swapped = AnsatzParams(
            config=swapped_cfg,
            eps=params.eps,
            mu=params.mu[::-1],
            c=params.c,
            delta=params.delta,
            profile=profile_s05,
        )
        assert np.allclose(lambda_solve(params), lambda_solve(swapped)[::-1], rtol=1e-14)
        f0 = error_field(params, vortex=0)
        f1 = error_field(swapped, vortex=1)
        assert np.allclose(f0.values, f1.values, atol=1e-15)

    def test_csv_export(self, profile_s05):
        params = pair_ansatz(profile_s05, 1.0, 1.0, 0.0, 1e-3)
        field = error_field(params, ngrid=5)
        buf = io.StringIO()
        error_field_to_csv(field, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "y1,y2,E"
        assert len(lines) == 26


class TestScalingStudy:
    def test_slope_at_half(self, profile_s05):
        report = scaling_study(profile_s05, [1e-2, 5e-3, 2.5e-3, 1.25e-3])
        assert 1.85 <= report.slope <= 2.15
        assert report.predicted == 2.0

    def test_slope_at_three_quarters(self, profile_s075):
        report = scaling_study(profile_s075, [1e-2, 5e-3, 2.5e-3, 1.25e-3])
        assert 1.35 <= report.slope <= 1.65
        assert report.predicted == 1.5

    def test_exact_speed_cancels_leading_order(self, profile_s05):
        # at the balanced pair speed the first-order term vanishes and the
        # measured exponent steepens toward 4-2s: the reduced-root mechanism
        c_exact = pair_speed(1.0, profile_s05.Mgamma, 0.5)
        report = scaling_study(profile_s05, [1e-2, 5e-3, 2.5e-3, 1.25e-3], c=c_exact)
        assert report.slope > 2.5

    def test_validation_errors(self, profile_s05):
        with pytest.raises(ValueError):
            scaling_study(profile_s05, [1e-2, 1e-2, 5e-3, 2.5e-3])
        with pytest.raises(ValueError):
            scaling_study(profile_s05, [1e-2, 5e-3, 2.5e-3])
        with pytest.raises(ValueError):
            scaling_study(profile_s05, [1e-2, 9e-3, 8e-3, 7e-3])

    def test_report_dict_layout(self, profile_s05):
        report = scaling_study(profile_s05, [1e-2, 5e-3, 2.5e-3, 1.25e-3])
        doc = report.to_dict()
        assert list(doc) == ["s", "gamma", "d", "eps", "sup_error", "slope", "predicted"]


class TestReducedBalance:
    def test_linear_coefficient_tracks_reduced_function(self, profile_s05):
        # fixed speed c = pair speed at d = 1; across separations the fitted
        # first-order coefficient is proportional to 1/d^{3-2s} + c_1 with a
        # d-independent positive constant, and vanishes at the root d = 1
        c = pair_speed(1.0, profile_s05.Mgamma, 0.5)
        c1 = reduced_speed_coefficient(c, profile_s05.Mgamma, 0.5)
        assert c1 == pytest.approx(-1.0, rel=1e-12)
        eps = 2.5e-3
        gamma = profile_s05.params.gamma
        ratios = []
        for d in (0.8, 0.9, 1.1, 1.25):
            field = error_field(pair_ansatz(profile_s05, d, profile_s05.Mgamma, c, eps))
            beta = fit_linear_coefficient(field, gamma)
            ratios.append(beta / reduced_function(d, c, profile_s05.Mgamma, 0.5))
        ratios = np.array(ratios)
        assert np.all(ratios > 0.0)
        assert ratios.max() / ratios.min() < 1.02
        at_root = fit_linear_coefficient(
            error_field(pair_ansatz(profile_s05, 1.0, profile_s05.Mgamma, c, eps)), gamma
        )
        assert abs(at_root) < 0.01 * abs(ratios[0])

    def test_root_self_consistency(self):
        c = pair_speed(1.0, 1.0, 0.5)
        root = reduced_root(c, 1.0, 0.5)
        assert abs(root - 1.0) < 1e-12

    def test_no_root_cases(self):
        assert reduced_root(0.0, 1.0, 0.5) is None
        assert reduced_root(0.1, 1.0, 0.5) is None
        assert reduced_function(2.0, 0.0, 1.0, 0.5) > 0.0

    def test_root_scaling(self):
        for s in (0.35, 0.5, 0.8):
            c = pair_speed(1.0, 1.0, s)
            tau = 1.7
            d1 = reduced_root(c, 1.0, s)
            d2 = reduced_root(tau ** (2 * s - 3) * c, 1.0, s)
            assert d2 == pytest.approx(tau * d1, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            reduced_function(-1.0, 0.1, 1.0, 0.5)


class TestBalancingBridge:
    def test_pair_reduces_to_traveling_residual(self):
        # F_p - c/K e1 = -(1/K) perp(traveling residual block)
        d, s = 1.3, 0.45
        c = pair_speed(d, 1.0, s)
        res = balancing_residual_multi([[d, 0.0]], [[-d, 0.0]], c, s).reshape(2, 2)
        cfg = VortexConfig([[d, 0.0], [-d, 0.0]], [1.0, -1.0], s)
        trav = traveling_residual(cfg, c).reshape(2, 2)
        K = interaction_constant(s)
        assert np.allclose(res[0], -perp(trav[0]) / K, atol=1e-12)
        assert np.abs(res).max() < 1e-12

    def test_six_vortex_points_with_fitted_speed(self):
        seed = six_vortex_seed()
        p, q = seed.reconstruct()
        res = balancing_residual_multi(p, q, seed.c, seed.s)
        assert np.abs(res).max() < 5e-3

    def test_reflection_flips_sign(self):
        seed = six_vortex_seed()
        p, q = seed.reconstruct()
        res = balancing_residual_multi(p, q, seed.c, seed.s).reshape(-1, 2)
        Rp = np.column_stack([-p[:, 0], p[:, 1]])
        Rq = np.column_stack([-q[:, 0], q[:, 1]])
        # reflecting swaps the signed roles, so evaluate with the blocks
        # exchanged and the speed negated
        res_r = balancing_residual_multi(Rq, Rp, -seed.c, seed.s).reshape(-1, 2)
        k = len(p)
        # p-block of the reflected array corresponds to the q-block of the
        # original with the e1 component negated
        assert np.allclose(res_r[:k, 0], -res[k:, 0], atol=1e-13)
        assert np.allclose(res_r[:k, 1], res[k:, 1], atol=1e-13)
