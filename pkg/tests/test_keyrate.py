import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from nlgqkd.entropy import AffineBound, affine_moe_bound, binary_entropy, load_example_curve, LOWER, UPPER
from nlgqkd.games import MSG_OMEGA3, msg_win_prob_closed_form
from nlgqkd.keyrate import (
    CurveFamily,
    MoeFamily,
    ProtocolParams,
    SecurityBudget,
    ZeroFamily,
    asymptotic_rate,
    completeness_gamma,
    devetak_winter,
    finite_key_length,
    fixed_point_rate,
    geat_constants,
    kappa_min,
    min_lec_for_correctness,
    noisy_asymptotic_rate,
    optimize_finite_rate,
    pe_failure_bound,
    positivity_region,
    robustness_threshold,
    theta,
)

CHSH_OMEGA2 = (2 + math.sqrt(2)) / 4
MSG_G = affine_moe_bound(1.0, MSG_OMEGA3)


class TestCompletenessGamma:
    def test_trivial_epsilon(self):
        assert completeness_gamma(0.99, 0.01, 1000, 1.0) == 0

    def test_example(self):
        expected = (2 * 0.0155 + 0.01) / (1e-4 * 1e8) * math.log(100)
        assert completeness_gamma(0.9845, 1e-2, 1e8, 1e-2) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(1.888119776255117e-05, rel=1e-14)

    def test_scaling_with_default_tolerance(self):
        for n in (1e6, 1e9, 1e12):
            d = n ** (-1 / 3)
            assert completeness_gamma(1.0, d, n, 1e-2) == pytest.approx(n ** (-2 / 3) * math.log(100), rel=1e-12)

    def test_monotone(self):
        base = completeness_gamma(0.98, 0.01, 1e6, 1e-2)
        assert completeness_gamma(0.98, 0.01, 2e6, 1e-2) < base
        assert completeness_gamma(0.98, 0.02, 1e6, 1e-2) < base
        assert completeness_gamma(0.98, 0.01, 1e6, 1e-3) > base

    def test_inverse(self):
        g = completeness_gamma(0.98, 0.01, 1e6, 1e-2)
        assert pe_failure_bound(0.98, 0.01, 1e6, g) == pytest.approx(1e-2, rel=1e-12)

    def test_nonpositive_tolerance(self):
        with pytest.raises(ValueError):
            completeness_gamma(0.98, 0.0, 1e6, 1e-2)


class TestSmallFormulas:
    @pytest.mark.parametrize("eps, bits", [(1.0, 0), (1e-6, 20), (2.0**-32, 32)])
    def test_lec(self, eps, bits):
        assert min_lec_for_correctness(eps) == bits

    def test_theta(self):
        assert theta(1.0) == 0
        assert theta(0.5) == pytest.approx(2.8999686269529917, abs=1e-13)
        grid = np.linspace(1e-9, 1, 200)
        assert np.all(np.diff([theta(d) for d in grid]) < 0)
        with pytest.raises(ValueError):
            theta(0.0)

    def test_theta_small_argument_is_stable(self):
        # 1 - sqrt(1 - d^2) ~ d^2 / 2 for small d
        assert theta(1e-9) == pytest.approx(-math.log2(0.5e-18), rel=1e-12)

    def test_kappa(self):
        assert kappa_min(1e8, 1.0) == 0
        assert kappa_min(1e8, 1e-7 / 8) == pytest.approx(4.265857146299927e-4, rel=1e-13)
        assert kappa_min(4e8, 1e-6) == pytest.approx(kappa_min(1e8, 1e-6) / 2, rel=1e-14)

    def test_devetak_winter(self):
        assert devetak_winter(1.0, 0.0) == 1
        assert devetak_winter(binary_entropy(0.1), 0.1) == pytest.approx(0, abs=1e-15)
        with pytest.raises(ValueError):
            devetak_winter(1.0, 0.7)


class TestBudget:
    def test_pedagogical_split(self):
        b = SecurityBudget.pedagogical(1e-6, eps_s=1e-7)
        assert (b.eps_s_prime, b.eps_s_dprime, b.eps_a) == (5e-8, 1.25e-8, 5e-7)
        assert b.smoothing_gap == pytest.approx(1e-7 / 4)

    def test_rejects_bad_split(self):
        with pytest.raises(ValueError):
            SecurityBudget(1e-6, 1e-6, 1e-2, 1e-2, 6e-7, 1e-8, 1e-8, 5e-7)
        with pytest.raises(ValueError):
            SecurityBudget(1e-6, 1e-6, 1e-2, 1e-2, 1e-7, 9e-8, 1e-8, 5e-7)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            ProtocolParams(100, 0.0, 0.1, 1.0, 0, 0)
        with pytest.raises(ValueError):
            ProtocolParams(100, 0.5, 0.1, 1.0, -1, 0)


class TestGeatConstants:
    def test_eta(self):
        c = geat_constants(MSG_G, 0.01, SecurityBudget.pedagogical(1e-6))
        assert c.eta == pytest.approx(0.5809402158035948, abs=1e-15)

    def test_constant_g(self):
        b = SecurityBudget.pedagogical(1e-6)
        c = geat_constants(AffineBound(0.0, 0.4), 0.01, b)
        assert c.V == pytest.approx(math.log2(17) + math.sqrt(2), rel=1e-14)
        d1, d0, _, _ = oracles.geat_by_hand(0.4, 0.4, 0.01, 1e-6, b.eps_s)
        assert (c.d1, c.d0) == (pytest.approx(d1, rel=1e-12), pytest.approx(d0, rel=1e-12))

    def test_msg_values_against_hand_evaluation(self):
        b = SecurityBudget.pedagogical(1e-6, eps_s=1e-7)
        c = geat_constants(MSG_G, 0.01, b)
        d1, d0, eta, V = oracles.geat_by_hand(MSG_G(0), MSG_G(1), 0.01, 1e-6, 1e-7)
        assert c.d1 == pytest.approx(d1, rel=1e-12)
        assert c.d0 == pytest.approx(d0, rel=1e-12)
        assert c.V == pytest.approx(V, rel=1e-14)
        # frozen from a 40-digit evaluation
        assert c.d1 == pytest.approx(280.16123506658031, rel=1e-12)
        assert c.d0 == pytest.approx(1706.8068693347929, rel=1e-12)
        assert c.V == pytest.approx(20.377722507714291, rel=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 20), st.floats(-5, 1), st.floats(1e-6, 1), st.floats(1e-12, 0.4))
    def test_ranges(self, slope, intercept, gamma, frac):
        b = SecurityBudget.pedagogical(1e-6, eps_s=frac * 1e-6)
        c = geat_constants(AffineBound(slope, intercept), gamma, b)
        assert c.d1 >= 0 and c.d0 >= 0
        assert 0.5 < c.eta < 1
        assert c.V >= math.log2(17)


def standard(n, q=0.0, xi=1.1):
    return ProtocolParams.standard(n, msg_win_prob_closed_form(q), xi=xi)


class TestFiniteKeyLength:
    def test_small_n_gives_nothing(self):
        r = finite_key_length(MSG_G, standard(1000), SecurityBudget.pedagogical(1e-6))
        assert r.l_key == 0 and not r.feasible

    def test_leading_term_dominates(self):
        b = SecurityBudget.pedagogical(1e-6)
        for n in (1e8, 1e12, 1e15):
            p = standard(n, 0.005)
            r = finite_key_length(MSG_G, p, b)
            assert r.rate <= MSG_G(p.omega_exp - p.delta_tol) + 1e-9

    def test_terms_add_up(self):
        r = finite_key_length(MSG_G, standard(1e12), SecurityBudget.pedagogical(1e-6))
        lost = sum(v for k, v in r.terms.items() if k != "leading")
        assert r.raw == pytest.approx(r.leading - lost, rel=1e-14)
        assert r.l_key == math.floor(r.raw)

    def test_conservative_costs_two_bits(self):
        b = SecurityBudget.pedagogical(1e-6)
        p = standard(1e12)
        plain = finite_key_length(MSG_G, p, b)
        safe = finite_key_length(MSG_G, p, b, conservative=True)
        assert plain.raw - safe.raw == pytest.approx(2.0)

    def test_smoothing_term_uses_gap(self):
        b = SecurityBudget.pedagogical(1e-6, eps_s=1e-7)
        r = finite_key_length(MSG_G, standard(1e12), b)
        assert r.theta_term == pytest.approx(2 * theta(1e-7 / 4), rel=1e-14)

    def test_lambda_ec(self):
        p = standard(1e10, 0.01)
        q = 1 - msg_win_prob_closed_form(0.01)
        assert p.lambda_ec == math.ceil(1.1 * 1e10 * binary_entropy(q))
        assert standard(1e10).lambda_ec == 0

    def test_nondecreasing_in_n(self):
        b = SecurityBudget.pedagogical(1e-6)
        fixed = standard(1e9)
        keys = []
        for n in np.logspace(6, 14, 9):
            p = ProtocolParams(int(n), fixed.gamma, fixed.delta_tol, fixed.omega_exp, 0, fixed.l_ec)
            keys.append(finite_key_length(MSG_G, p, b).l_key)
        assert all(a <= c for a, c in zip(keys, keys[1:]))
        assert keys[-1] > 0


class TestAsymptotic:
    def test_msg_noiseless(self):
        assert asymptotic_rate(MSG_G, 1.0, xi=1.0) == pytest.approx(0.16978614872680654, abs=1e-14)

    def test_chsh_negative(self):
        g = affine_moe_bound(CHSH_OMEGA2, 0.75)
        r = asymptotic_rate(g, CHSH_OMEGA2, xi=1.1)
        assert r < 0
        assert 1.1 * binary_entropy(1 - CHSH_OMEGA2) == pytest.approx(0.661, abs=1e-3)

    def test_no_advantage(self):
        g = affine_moe_bound(0.9, 0.9)
        assert asymptotic_rate(g, 0.9, xi=1.1) <= -1.1 * binary_entropy(0.1) + 1e-15

    def test_vn_table_example(self):
        c = load_example_curve(LOWER)
        q = 1 - 0.99
        fam = CurveFamily(c)
        assert asymptotic_rate(fam.bound(0.99), 0.99, xi=1.0) == pytest.approx(c(0.99) - binary_entropy(q), abs=1e-14)


class TestOptimizer:
    def test_degenerate_family(self):
        b = SecurityBudget.pedagogical(1e-6)
        r = optimize_finite_rate(MoeFamily(0.9, 0.9), ProtocolParams.standard(1e8, 0.9), b, n_eps=5)
        assert r.l_key == 0

    def test_better_than_fixed_point(self):
        b = SecurityBudget.pedagogical(1e-6)
        p = standard(1e10)
        best = optimize_finite_rate((1.0, MSG_OMEGA3), p, b)
        fixed = fixed_point_rate((1.0, MSG_OMEGA3), p, b, beta=1.0 - 1e-3)
        assert best.raw > fixed.raw
        # at 1e10 both lengths clamp to zero, so also compare where the key is positive
        p12 = standard(1e12)
        best12 = optimize_finite_rate((1.0, MSG_OMEGA3), p12, b)
        fixed12 = fixed_point_rate((1.0, MSG_OMEGA3), p12, b, beta=1.0 - 1e-3)
        assert best12.rate > fixed12.rate > 0

    def test_refined_grid_never_worse(self):
        b = SecurityBudget.pedagogical(1e-6)
        p = standard(1e12)
        coarse = np.geomspace(1e-16, 4e-7, 5)
        fine = np.union1d(coarse, np.geomspace(1e-16, 4e-7, 17))
        r1 = optimize_finite_rate((1.0, MSG_OMEGA3), p, b, eps_s_grid=coarse)
        r2 = optimize_finite_rate((1.0, MSG_OMEGA3), p, b, eps_s_grid=fine)
        assert r2.l_key >= r1.l_key

    def test_exhaustive_never_worse(self):
        b = SecurityBudget.pedagogical(1e-6)
        p = standard(1e12)
        grid = np.geomspace(1e-14, 4e-7, 6)
        r1 = optimize_finite_rate((1.0, MSG_OMEGA3), p, b, eps_s_grid=grid)
        r2 = optimize_finite_rate((1.0, MSG_OMEGA3), p, b, eps_s_grid=grid, exhaustive=True)
        assert r2.raw >= r1.raw - 1e-6

    def test_deterministic(self):
        b = SecurityBudget.pedagogical(1e-6)
        p = standard(1e12, 0.005)
        assert optimize_finite_rate((1.0, MSG_OMEGA3), p, b) == optimize_finite_rate((1.0, MSG_OMEGA3), p, b)

    def test_curve_source(self):
        b = SecurityBudget.pedagogical(1e-6)
        r = optimize_finite_rate(load_example_curve(UPPER), standard(1e12), b, n_eps=10)
        assert r.rate > 0

    def test_higher_noise_lower_rate_at_large_n(self):
        b = SecurityBudget.pedagogical(1e-6)
        qs = (0, 0.005, 0.01)
        rates = [optimize_finite_rate((1.0, MSG_OMEGA3), standard(1e15, q), b, n_eps=15).rate for q in qs]
        assert rates[0] > rates[1] > rates[2] > 0

    def test_small_noise_can_beat_noiseless_at_moderate_n(self):
        # At omega_exp = 1 the completeness testing rate shrinks to ln(1/eps) n^(-2/3),
        # which inflates the variance term; a little noise raises gamma and wins.
        b = SecurityBudget.pedagogical(1e-6)
        r0 = optimize_finite_rate((1.0, MSG_OMEGA3), standard(1e13, 0.0), b, n_eps=15)
        r1 = optimize_finite_rate((1.0, MSG_OMEGA3), standard(1e13, 0.002), b, n_eps=15)
        assert r1.gamma > 100 * r0.gamma
        assert r1.rate > r0.rate


class TestRegion:
    def test_msg_and_chsh(self):
        cells = positivity_region([1.0, CHSH_OMEGA2], [8 / 9, 0.75])
        by = {(c.omega2, c.omega3): c for c in cells}
        assert by[(1.0, 8 / 9)].positive
        assert not by[(CHSH_OMEGA2, 0.75)].positive

    def test_diagonal_negative(self):
        grid = np.linspace(0.5, 1, 26)
        for c in positivity_region(grid, grid):
            if c.omega2 == c.omega3:
                assert not c.positive

    def test_only_admissible_cells(self):
        cells = positivity_region([0.8, 0.9], [0.85])
        assert [(c.omega2, c.omega3) for c in cells] == [(0.9, 0.85)]


class TestThreshold:
    def test_zero_bound(self):
        t = robustness_threshold(ZeroFamily())
        assert t.q_star == 0 and not t.bracketed

    def test_affine_against_scan(self):
        t = robustness_threshold((1.0, MSG_OMEGA3))
        qs = np.linspace(0, 0.05, 200_001)
        ref = oracles.first_root_on_grid(qs, oracles.moe_rate_scan(MSG_OMEGA3, 1.0, qs))
        assert t.bracketed
        assert abs(t.q_star - ref) <= 1e-5
        assert t.q_star == pytest.approx(0.012642, abs=2e-5)

    def test_rate_helper_matches_scan(self):
        for q in (0.0, 0.004, 0.011, 0.02):
            assert noisy_asymptotic_rate((1.0, MSG_OMEGA3), q) == pytest.approx(
                float(oracles.moe_rate_scan(MSG_OMEGA3, 1.0, [q])[0]), abs=1e-13
            )

    def test_never_zero(self):
        t = robustness_threshold((1.0, 0.5), q_max=0.01)
        assert t.q_star == 0.01 and not t.bracketed
