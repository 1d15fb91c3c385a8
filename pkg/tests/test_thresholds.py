import math

import numpy as np
import pytest

from nlisaacs.kernel import normalizing_constant
from nlisaacs.thresholds import (
    BracketFailure,
    NoRoot,
    ThresholdReport,
    build_threshold_report,
    eval_g,
    eval_g_right_derivative_at_zero,
    eval_h,
    eval_l,
    eval_l_reduced,
    eval_supersolution_constant,
    find_alpha_star,
    find_eps_threshold,
    find_s0,
)
from nlisaacs.quadrature import DomainError


class TestNormalizingConstant:
    def test_half_order_value(self):
        # C_{1/2} = 2 Gamma(1) / (sqrt(pi) |Gamma(-1/2)|) = 1/pi
        assert normalizing_constant(0.5) == pytest.approx(1.0 / math.pi,
                                                          rel=1e-12)

    def test_vanishes_toward_endpoints(self):
        # |Gamma(-s)| blows up at both s=0 and s=1, so C_s -> 0 there;
        # the divergence of the integral itself restores the local limit
        assert normalizing_constant(1e-6) < 1e-5
        assert normalizing_constant(1.0 - 1e-6) < 1e-5
        assert normalizing_constant(0.5) > 0.1

    def test_domain(self):
        with pytest.raises(ValueError):
            normalizing_constant(1.0)


class TestLogKernel:
    def test_closed_form_at_order_one(self):
        for c in (1.2, 1.5, 2.0):
            want = ((c - 1.0) / c) * math.log(c - 1.0) - math.log(c)
            assert eval_h(c, 1.0) == pytest.approx(want, abs=1e-10)

    def test_closed_form_at_order_half(self):
        for c in (1.3, 1.8, 2.0):
            rc = math.sqrt(c)
            want = 2.0 * (math.pi
                          + ((rc - 1.0) / rc) * math.log(rc - 1.0)
                          - ((rc + 1.0) / rc) * math.log(rc + 1.0))
            assert eval_h(c, 0.5) == pytest.approx(want, abs=1e-9)

    def test_sign_change_on_upper_half(self):
        # positive at s=1/2, negative at s=1 for c in (1, 2]
        for c in (1.1, 1.7, 2.0):
            assert eval_h(c, 0.5) > 0.0
            assert eval_h(c, 1.0) < 0.0

    def test_domain(self):
        with pytest.raises(DomainError):
            eval_h(1.0, 0.75)


class TestS0:
    def test_certificate(self):
        r = find_s0(2.0)
        assert 0.5 < r.value < 1.0
        assert r.width < 1e-8
        assert r.f_lo > 0.0 > r.f_hi
        assert eval_h(2.0, r.value) == pytest.approx(0.0, abs=1e-7)

    def test_decreasing_in_c(self):
        # a wider log kernel goes negative earlier, so the zero moves down
        vals = [find_s0(c).value for c in (1.2, 1.5, 2.0)]
        assert vals[0] > vals[1] > vals[2]

    def test_float_protocol(self):
        r = find_s0(1.5)
        assert float(r) == r.value


class TestProfileIntegral:
    def test_zero_at_order(self):
        for s in (0.6, 0.75, 0.9):
            assert abs(eval_l(s, s)) < 1e-8

    def test_sign_structure(self):
        assert eval_l(0.75, 0.5) < 0.0
        assert eval_l(0.75, 1.1) > 0.0

    def test_two_formulas_agree(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            s = rng.uniform(0.55, 0.95)
            alpha = rng.uniform(0.05, 2.0 * s - 0.05)
            assert eval_l(s, alpha) == pytest.approx(
                eval_l_reduced(s, alpha), abs=1e-9, rel=1e-9)


class TestCuspedBody:
    def test_left_endpoint_limit(self):
        v3, v4 = eval_g(1.3, 0.8, 1e-3), eval_g(1.3, 0.8, 1e-4)
        assert abs(v3) < 1e-2 and abs(v4) < abs(v3)

    def test_right_derivative_matches_log_kernel(self):
        for c, s in ((math.sqrt(2.0), 0.9), (1.2, 0.8)):
            want = 0.5 * eval_h(min(c * c, 2.0), s)
            assert eval_g_right_derivative_at_zero(c, s) == pytest.approx(
                want, abs=1e-6)

    def test_convex(self):
        alphas = np.linspace(0.05, 0.9, 12)
        vals = np.array([eval_g(1.2, 0.8, a) for a in alphas])
        assert np.all(np.diff(vals, 2) > 0.0)

    def test_positive_at_one_for_sqrt2(self):
        assert eval_g(math.sqrt(2.0), 0.95, 1.0) > 0.0

    def test_root_certificate(self):
        r = find_alpha_star(math.sqrt(2.0), 0.95)
        assert 0.0 < r.value < 1.0
        assert r.f_lo < 0.0 < r.f_hi
        assert eval_g(math.sqrt(2.0), 0.95, r.value) == pytest.approx(
            0.0, abs=1e-7)

    def test_no_root_when_slope_positive(self):
        # below the order threshold the slope at zero is positive
        with pytest.raises(NoRoot):
            find_alpha_star(math.sqrt(2.0), 0.55)


class TestSupersolutionConstant:
    def test_negative_for_small_eps(self):
        assert eval_supersolution_constant(0.8, 0.01) < 0.0
        assert eval_supersolution_constant(0.9, 0.005) < 0.0

    def test_positive_for_large_eps(self):
        assert eval_supersolution_constant(0.8, 0.5) > 0.0

    def test_threshold_certificate(self):
        r = find_eps_threshold(0.9)
        assert r.value > 0.0
        assert r.f_lo < 0.0 < r.f_hi
        assert eval_supersolution_constant(0.9, r.value) == pytest.approx(
            0.0, abs=1e-7)

    def test_threshold_shrinks_toward_local_limit(self):
        assert find_eps_threshold(0.99).value < find_eps_threshold(0.8).value

    def test_domain(self):
        with pytest.raises(DomainError):
            eval_supersolution_constant(0.8, 2.0)


class TestReport:
    def test_build_and_serialize(self):
        rep = build_threshold_report(1.4, 0.95)
        d = rep.to_dict()
        assert d["c"] == 1.4 and d["s"] == 0.95
        assert d["s0"]["value"] > 0.5
        assert d["alpha_star"] is not None
        row = rep.csv_row()
        assert len(row) == len(ThresholdReport.CSV_COLUMNS)

    def test_alpha_star_absent_outside_domain(self):
        rep = build_threshold_report(2.0, 0.95)  # c > sqrt(2)
        assert rep.alpha_star is None
