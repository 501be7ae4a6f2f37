"""Tests for the coupling, dispersion, noise kernels, and expansion constants."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrchain import potential as P

ZETA3 = float(mpmath.zeta(3))

# Reference values computed independently: closed forms where they exist,
# high-precision mpmath summation and quadrature otherwise.
C1_REFERENCE = {
    1.5: math.sqrt(8.0 * math.pi),
    2.0: math.pi,
    2.5: 3.342171032841334,
    3.0: 1.0,
    3.5: 2.612375348685488,
    4.0: math.pi**2 / 6.0,
    4.5: 1.3414872572509176,
    6.0: math.pi**4 / 90.0,
}
C2_REFERENCE = {
    2.5: -1.4603545088095868,
    3.0: 1.5,
    3.5: -1.3368684131365293,
    4.0: -math.pi / 6.0,
    4.5: -0.3819624037532948,
    5.0: -1.0 / 12.0,
    6.0: -math.pi**2 / 72.0,
}

THETA_CASES = [1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 6.0]


def spec_for(theta, cutoff=100_000, tol=1e-9):
    return P.PotentialSpec(theta=theta, series_cutoff=cutoff, tail_tolerance=tol)


class TestPotentialSpec:
    def test_rejects_nonsummable_exponent(self):
        with pytest.raises(ValueError):
            P.PotentialSpec(theta=1.0)
        with pytest.raises(ValueError):
            P.PotentialSpec(theta=0.5)

    def test_rejects_small_cutoff_and_bad_tolerance(self):
        with pytest.raises(ValueError):
            P.PotentialSpec(theta=2.5, series_cutoff=10)
        with pytest.raises(ValueError):
            P.PotentialSpec(theta=2.5, tail_tolerance=0.0)


class TestAlphaCoeff:
    def test_unit_offset(self):
        assert P.alpha_coeff(1, spec_for(3.0)) == -1.0

    def test_symmetry_at_two(self):
        assert P.alpha_coeff(-2, spec_for(2.0)) == -0.25

    def test_diagonal_is_twice_zeta(self):
        # 2 * zeta(4) = pi^4 / 45
        val = P.alpha_coeff(0, spec_for(4.0))
        assert val == pytest.approx(math.pi**4 / 45.0, rel=1e-12)

    def test_row_sum_vanishes(self):
        spec = spec_for(2.5)
        diag = P.alpha_coeff(0, spec)
        offsets = np.arange(1, 200_000)
        partial = 2.0 * np.sum(-(offsets.astype(float)) ** (-2.5))
        tail = -2.0 * P._zeta_tail(2.5, 200_000)
        assert diag + partial + tail == pytest.approx(0.0, abs=1e-12)

    @given(x=st.integers(min_value=-10_000, max_value=10_000).filter(lambda v: v != 0))
    def test_even_and_negative_off_diagonal(self, x):
        spec = spec_for(3.5)
        assert P.alpha_coeff(x, spec) == P.alpha_coeff(-x, spec)
        assert P.alpha_coeff(x, spec) < 0.0


class TestAlphaHat:
    def test_zero_frequency(self):
        for theta in THETA_CASES:
            assert P.alpha_hat(0.0, spec_for(theta)) == 0.0

    def test_half_frequency_odd_sum(self):
        # Only odd offsets contribute at k = 1/2:
        # alpha_hat(1/2) = 4 (1 - 2^-3) zeta(3) = (7/2) zeta(3).
        spec = spec_for(3.0, cutoff=2**23, tol=1e-12)
        assert P.alpha_hat(0.5, spec) == pytest.approx(3.5 * ZETA3, abs=1e-11)

    def test_matches_closed_evaluator(self):
        for theta in THETA_CASES:
            tol = 1e-7 if theta < 2.25 else 1e-10
            spec = spec_for(theta, cutoff=2**23, tol=tol)
            for k in [0.5, 0.25, 0.1, 0.01, 1e-3, -0.37]:
                assert P.alpha_hat(k, spec) == pytest.approx(
                    P._alpha_hat_closed(k, theta), abs=2.0 * tol
                )

    def test_grid_nonnegative_even_and_zero_at_origin(self):
        k = np.linspace(-0.5, 0.5, 10_000, endpoint=False)
        for theta in THETA_CASES:
            vals = P._alpha_hat_closed(k, theta)
            assert np.all(vals >= 0.0)
            flipped = P._alpha_hat_closed(-k, theta)
            np.testing.assert_allclose(vals, flipped, rtol=0, atol=1e-12)
        assert P._alpha_hat_closed(0.0, 3.5) == 0.0

    def test_series_evenness_spot(self):
        spec = spec_for(2.5)
        for k in [0.03, 0.21, 0.44]:
            assert P.alpha_hat(k, spec) == pytest.approx(
                P.alpha_hat(-k, spec), rel=1e-14
            )

    def test_periodic_reduction(self):
        spec = spec_for(3.5)
        assert P.alpha_hat(0.7, spec) == pytest.approx(
            P.alpha_hat(-0.3, spec), rel=1e-14
        )

    def test_unreachable_tolerance_signals(self):
        spec = spec_for(1.5, cutoff=1000, tol=1e-12)
        with pytest.raises(P.ConvergenceError):
            P.alpha_hat(1e-6, spec)

    def test_large_theta_fallback(self):
        spec = spec_for(7.5, cutoff=2**23, tol=1e-12)
        assert P._alpha_hat_closed(0.125, 7.5) == pytest.approx(
            P.alpha_hat(0.125, spec), abs=1e-12
        )


class TestOmega:
    def test_zero_and_evenness(self):
        spec = spec_for(2.5)
        assert P.omega(0.0, spec) == 0.0
        assert P.omega(-0.27, spec) == pytest.approx(P.omega(0.27, spec), rel=1e-14)

    def test_half_frequency_value(self):
        spec = spec_for(3.0, cutoff=2**23, tol=1e-12)
        assert P.omega(0.5, spec) == pytest.approx(math.sqrt(3.5 * ZETA3), abs=1e-11)

    def test_positive_off_origin(self):
        spec = spec_for(4.0)
        ks = np.linspace(0.001, 0.499, 50)
        assert all(P.omega(float(k), spec) > 0.0 for k in ks)

    def test_quartic_dispersion_root_is_polynomial(self):
        # zeta(2) w^2 - (pi/6) w^3 + w^4/24 is the square of
        # w/sqrt(6) (pi - w/2), so omega at theta = 4 is exactly quadratic.
        spec = spec_for(4.0, cutoff=2**23, tol=1e-12)
        for k in np.linspace(0.003, 0.5, 40):
            w = 2.0 * math.pi * k
            exact = (w / math.sqrt(6.0)) * (math.pi - 0.5 * w)
            assert P._omega_closed(float(k), 4.0) == pytest.approx(exact,
                                                                   rel=1e-12)
            assert P.omega(float(k), spec) == pytest.approx(exact, rel=1e-8)


class TestNoiseKernels:
    def test_rate_pins(self):
        assert P.noise_rate_R(0.0) == 0.0
        assert P.noise_rate_R(0.5) == pytest.approx(2.0, rel=1e-15)
        assert P.noise_rate_R(0.25) == pytest.approx(2.0, rel=1e-15)

    def test_rate_nonnegative_and_even(self):
        k = np.linspace(-0.5, 0.5, 10_000, endpoint=False)
        vals = P.noise_rate_R(k)
        assert np.all(vals >= 0.0)
        np.testing.assert_allclose(vals, P.noise_rate_R(-k), atol=1e-15)
        interior = k[np.abs(k) > 1e-12]
        assert np.all(P.noise_rate_R(interior) > 0.0)

    def test_kernel_pins(self):
        assert P.noise_kernel_r(0.25, 0.0) == pytest.approx(2.0, rel=1e-15)
        assert P.noise_kernel_r(0.0, 0.37) == 0.0

    @given(k=st.floats(min_value=-0.5, max_value=0.5, allow_nan=False))
    def test_kernel_diagonal_vanishes(self, k):
        assert P.noise_kernel_r(k, k) == 0.0


class TestCouplingF:
    def test_opposite_frequencies(self):
        for theta in (2.5, 3.5, 5.0):
            spec = spec_for(theta)
            for k in (0.05, 0.2, 0.45):
                assert P.coupling_F(k, -k, spec) == pytest.approx(-2.0, rel=1e-12)

    @given(
        k=st.floats(min_value=-0.49, max_value=0.49).filter(lambda v: abs(v) > 1e-3),
        kp=st.floats(min_value=-0.49, max_value=0.49).filter(lambda v: abs(v) > 1e-3),
    )
    @settings(max_examples=50, deadline=None)
    def test_symmetry(self, k, kp):
        spec = spec_for(3.5)
        assert P.coupling_F(k, kp, spec) == pytest.approx(
            P.coupling_F(kp, k, spec), rel=1e-10
        )

    def test_small_frequency_limit(self):
        # For theta > 3 the kernel approaches 2 on the diagonal, with a
        # k^((theta-3)) correction; at k = 1e-3 and theta = 3.5 the value
        # sits 3.5 percent below the limit and tightens with k.
        spec = spec_for(3.5)
        f3 = P.coupling_F(1e-3, 1e-3, spec)
        f5 = P.coupling_F(1e-5, 1e-5, spec)
        assert f3 == pytest.approx(1.9299527659958453, rel=1e-9)
        assert abs(f5 - 2.0) < abs(f3 - 2.0) / 8.0
        assert abs(f5 - 2.0) < 0.01 * 2.0

    def test_bounded_on_grid(self):
        edges = np.linspace(-0.5, 0.5, 201)
        mids = 0.5 * (edges[:-1] + edges[1:])
        mids = mids[np.abs(mids) > 1e-9]
        kk, kp = np.meshgrid(mids, mids)
        for theta in (2.5, 3.5):
            vals = P.coupling_F(kk, kp, spec_for(theta))
            assert np.all(np.isfinite(vals))
            assert np.max(np.abs(vals)) <= 6.0

    def test_zero_frequency_rejected(self):
        spec = spec_for(2.5)
        with pytest.raises(ValueError):
            P.coupling_F(0.0, 0.3, spec)
        with pytest.raises(ValueError):
            P.coupling_F(0.3, 1.0, spec)


class TestConstC1:
    def test_reference_values(self):
        for theta, ref in C1_REFERENCE.items():
            assert P.const_c1(theta) == pytest.approx(ref, rel=1e-8), theta

    def test_rejects_theta_at_most_one(self):
        with pytest.raises(ValueError):
            P.const_c1(1.0)
        with pytest.raises(ValueError):
            P.const_c1(0.3)

    def test_quadrature_matches_gamma_form_below_three(self):
        # Independent closed form of the same integral.
        for theta in (1.2, 1.8, 2.0, 2.3, 2.9):
            assert P.const_c1(theta) == pytest.approx(
                P._c1_gamma(theta), rel=1e-8
            ), theta

    def test_series_branch_is_zeta(self):
        for theta in (3.3, 4.2, 5.5, 7.0):
            ref = float(mpmath.zeta(theta - 2.0))
            assert P.const_c1(theta) == pytest.approx(ref, rel=1e-12), theta

    @given(theta=st.floats(min_value=1.05, max_value=8.0))
    @settings(max_examples=40, deadline=None)
    def test_positive(self, theta):
        assert P.const_c1(theta) > 0.0


class TestConstC2:
    def test_reference_values(self):
        for theta, ref in C2_REFERENCE.items():
            assert P.const_c2(theta) == pytest.approx(ref, rel=1e-6), theta

    def test_rejects_theta_at_most_two(self):
        with pytest.raises(ValueError):
            P.const_c2(2.0)
        with pytest.raises(ValueError):
            P.const_c2(1.5)

    def test_staircase_matches_zeta_continuation(self):
        # The staircase integral below theta = 3 evaluates the analytic
        # continuation of zeta at theta - 2.
        for theta in (2.2, 2.5, 2.8):
            ref = float(mpmath.zeta(theta - 2.0))
            assert P.const_c2(theta) == pytest.approx(ref, rel=1e-9), theta

    def test_integral_matches_gamma_form_between_three_and_five(self):
        for theta in (3.2, 3.5, 4.0, 4.8):
            assert P.const_c2(theta) == pytest.approx(
                P._c1_gamma(theta), rel=1e-8
            ), theta

    def test_divergence_toward_five(self):
        # The 3 < theta < 5 integral genuinely blows down near theta = 5,
        # like -1/(12 (5 - theta)); the case table is discontinuous there
        # by construction.
        assert P.const_c2(4.99) == pytest.approx(-1.0 / 0.12, rel=0.05)
        assert P.const_c2(4.999) < -50.0


class TestAsymptoticConstants:
    def test_leading_exponent_caps_at_two(self):
        assert P.asymptotic_constants(2.5).leading_exponent == pytest.approx(1.5)
        assert P.asymptotic_constants(3.0).leading_exponent == pytest.approx(2.0)
        assert P.asymptotic_constants(4.7).leading_exponent == pytest.approx(2.0)

    def test_log_flags_only_at_three_and_five(self):
        for theta in THETA_CASES:
            c = P.asymptotic_constants(theta)
            assert c.has_log_leading == (theta == 3.0)
            assert c.has_log_second == (theta == 5.0)

    def test_no_second_term_at_or_below_two(self):
        for theta in (1.5, 2.0):
            c = P.asymptotic_constants(theta)
            assert math.isnan(c.c2) and math.isnan(c.second_exponent)

    def test_second_exponent_table(self):
        assert P.asymptotic_constants(2.5).second_exponent == pytest.approx(2.0)
        assert P.asymptotic_constants(3.0).second_exponent == pytest.approx(2.0)
        assert P.asymptotic_constants(3.5).second_exponent == pytest.approx(2.5)
        assert P.asymptotic_constants(4.0).second_exponent == pytest.approx(3.0)
        assert P.asymptotic_constants(4.5).second_exponent == pytest.approx(3.5)
        assert P.asymptotic_constants(5.0).second_exponent == pytest.approx(4.0)
        assert P.asymptotic_constants(6.0).second_exponent == pytest.approx(4.0)

    def test_c1_positive_on_grid(self):
        for theta in np.linspace(1.1, 7.9, 35):
            assert P.asymptotic_constants(float(theta)).c1 > 0.0


class TestAsymptoticPrediction:
    REMAINDER_TABLE = {
        1.5: (1.5, False),
        2.0: (2.0, True),
        2.5: (2.5, False),
        3.0: (3.0, False),
        3.5: (3.5, False),
        4.0: (4.0, True),
        4.5: (4.0, False),
        5.0: (4.0, False),
        6.0: (5.0, False),
        7.0: (6.0, True),
        8.0: (6.0, False),
    }

    def test_remainder_order_table(self):
        for theta, (order, has_log) in self.REMAINDER_TABLE.items():
            _, got_order, got_log = P.asymptotic_prediction(1e-3, spec_for(theta))
            assert got_order == pytest.approx(order), theta
            assert got_log == has_log, theta

    def test_zero_frequency_rejected(self):
        with pytest.raises(ValueError):
            P.asymptotic_prediction(0.0, spec_for(2.5))

    def test_prediction_tracks_dispersion(self):
        # Two-term accuracy at a moderate frequency, scaled by the true
        # remainder size for the case.
        for theta in THETA_CASES:
            spec = spec_for(theta)
            k = 1e-3
            pred, _, _ = P.asymptotic_prediction(k, spec)
            err = abs(P._alpha_hat_closed(k, theta) - pred)
            envelope = P._tight_remainder_envelope(k, theta)
            assert err < 300.0 * envelope, theta

    def test_leading_term_share_at_small_k(self):
        # At theta = 2.5 and k = 1e-4 the second term still contributes
        # about 1.1 percent of the prediction.
        spec = spec_for(2.5, cutoff=2**23, tol=1e-11)
        k = 1e-4
        lead = P.const_c1(2.5) * (2.0 * math.pi * k) ** 1.5
        full = P.alpha_hat(k, spec)
        assert abs(full - lead) / full == pytest.approx(0.011, abs=0.002)

    def test_dyadic_remainder_drift_within_factor_five(self):
        for theta in THETA_CASES:
            ratios = []
            for j in range(8, 21):
                k = 2.0**-j
                rem = abs(P._remainder_exact(k, theta))
                ratios.append(rem / P._tight_remainder_envelope(k, theta))
            ratios = np.array(ratios)
            med = float(np.median(ratios))
            assert ratios.max() <= 5.0 * med, theta
            assert ratios.min() >= med / 5.0, theta

    def test_exact_remainder_matches_finite_difference(self):
        # Where double precision still resolves the subtraction, both
        # remainder routes agree.
        for theta in THETA_CASES:
            c1, c2 = P._exact_constants(theta)
            k = 2.0**-8
            pred, _, _ = P._prediction_table(k, theta, c1, c2)
            fd = P._alpha_hat_closed(k, theta) - pred
            an = P._remainder_exact(k, theta)
            assert fd == pytest.approx(an, rel=1e-6), theta

    def test_prediction_continuity_across_three(self):
        # Smoke check: the two-term value at fixed k moves by a few percent
        # across the theta = 3 boundary despite the case change.
        vals = []
        for theta in (2.95, 3.0, 3.05):
            pred, _, _ = P.asymptotic_prediction(0.08, spec_for(theta))
            vals.append(pred)
        assert abs(vals[1] - vals[0]) / vals[0] < 0.05
        assert abs(vals[2] - vals[1]) / vals[1] < 0.05


class TestCrossAsymptoticCheck:
    def test_zero_sum_degenerates_to_dispersion(self):
        spec = spec_for(4.0)
        for k in (1e-2, 1e-3):
            lhs, rhs, _ = P.cross_asymptotic_check(k, -k, spec)
            assert lhs == pytest.approx(-2.0 * P._alpha_hat_closed(k, 4.0), rel=1e-12)
            assert rhs == pytest.approx(-2.0 * (2.0 * math.pi) ** 2 * P.const_c1(4.0) * k * k)
        # second-order agreement
        lhs, rhs, _ = P.cross_asymptotic_check(1e-3, -1e-3, spec)
        assert lhs / rhs == pytest.approx(1.0, abs=3e-3)

    def test_ratio_convergence_above_three(self):
        spec = spec_for(4.0)
        r1 = P.cross_asymptotic_check(1e-3, 2e-3, spec)
        r2 = P.cross_asymptotic_check(1e-4, 2e-4, spec)
        assert abs(r2[0] / r2[1] - 1.0) < abs(r1[0] / r1[1] - 1.0)
        assert r2[0] / r2[1] == pytest.approx(1.0, abs=2e-3)

    def test_envelope_constants(self):
        # The measured prefactor of the theta = 2.5 remainder is
        # 2 (2 pi)^2 |zeta(1/2)|, about 115; a uniform pin at 150 covers
        # every case on mixed-sign and same-sign pairs.
        for theta in THETA_CASES:
            spec = spec_for(theta)
            worst = 0.0
            for s in (1e-2, 1e-3, 1e-4, 1e-5):
                for a, b in ((s, -2 * s), (s, 2 * s), (3 * s, -s), (s, s)):
                    lhs, rhs, bound = P.cross_asymptotic_check(a, b, spec)
                    worst = max(worst, abs(lhs - rhs) / bound)
            assert worst < 150.0, theta

    def test_log_envelope_at_two(self):
        spec = spec_for(2.0)
        k = 1e-4
        lhs, rhs, bound = P.cross_asymptotic_check(k, k, spec)
        assert bound == pytest.approx(2.0 * k * k * math.log(1.0 / k))
        assert abs(lhs - rhs) < 6.0 * bound

    def test_domain_errors(self):
        spec = spec_for(3.0)
        with pytest.raises(ValueError):
            P.cross_asymptotic_check(0.0, 0.1, spec)
        with pytest.raises(ValueError):
            P.cross_asymptotic_check(0.3, 0.4, spec)
