import numpy as np
import pytest

from nlisaacs.operators import Ball
from nlisaacs.profiles import SmoothProfile, gaussian, radial_power
from nlisaacs.quadrature import DomainError
from nlisaacs.regularity import (
    BarrierViolation,
    InsufficientScales,
    barrier_check,
    extremal_limit_check,
    holder_fit,
    liouville_experiment,
)
from nlisaacs.thresholds import eval_l


class TestHolderFit:
    def test_square_root_cusp(self):
        fit = holder_fit(radial_power(2, 0.5), Ball([0.0, 0.0], 1.0))
        assert fit.alpha_hat == pytest.approx(0.5, abs=0.05)
        assert fit.seminorm_hat > 0.0

    def test_lipschitz_profile_near_one(self):
        u = SmoothProfile(lambda x: np.abs(x[..., 0] + x[..., 1]), 2)
        fit = holder_fit(u, Ball([0.0, 0.0], 1.0))
        assert fit.alpha_hat == pytest.approx(1.0, abs=0.1)

    def test_constant_is_degenerate(self):
        u = SmoothProfile(lambda x: np.zeros(x.shape[:-1]), 2)
        fit = holder_fit(u, Ball([0.0, 0.0], 1.0))
        assert fit.degenerate and fit.seminorm_hat == 0.0

    def test_amplitudes_decreasing(self):
        fit = holder_fit(radial_power(2, 0.5), Ball([0.0, 0.0], 1.0))
        assert all(a >= b for a, b in zip(fit.amplitudes,
                                          fit.amplitudes[1:]))

    def test_coarse_grid_rejected(self):
        from nlisaacs.operators import GridFunction
        dom = Ball([0.0, 0.0], 1.0)
        gf = GridFunction(dom, 0.25)  # floor 4h = 1.0 kills every scale
        with pytest.raises(InsufficientScales):
            holder_fit(gf, dom)


class TestBarrierCheck:
    def test_unit_ball_all_negative(self):
        rep = barrier_check(Ball([0.0, 0.0], 1.0), 0.8, 0.4, mu=0.1,
                            spacing=1.0 / 32.0)
        assert rep.m_hat > 0.0
        assert max(rep.products) < 0.0

    def test_exponent_above_order_violates(self):
        # alpha must lie below s for the barrier sign
        with pytest.raises(DomainError):
            barrier_check(Ball([0.0, 0.0], 1.0), 0.8, 0.9, mu=0.1,
                          spacing=1.0 / 32.0)

    def test_m_hat_stable_under_halving(self):
        dom = Ball([0.0, 0.0], 1.0)
        m1 = barrier_check(dom, 0.8, 0.4, mu=0.1, spacing=1.0 / 32.0).m_hat
        m2 = barrier_check(dom, 0.8, 0.4, mu=0.1, spacing=1.0 / 64.0).m_hat
        assert abs(m1 - m2) / m1 < 0.25


class TestExtremalLimit:
    def test_normal_direction_matches_profile_integral(self):
        est, pred, _ = extremal_limit_check(
            Ball([0.0, 0.0], 1.0), 0.8, 0.4, [1.0, 0.0], [1.0, 0.0])
        assert pred == pytest.approx(eval_l(0.8, 0.4), rel=1e-12)
        assert est == pytest.approx(pred, rel=0.02)

    def test_tangential_direction_vanishes(self):
        est, pred, _ = extremal_limit_check(
            Ball([0.0, 0.0], 1.0), 0.8, 0.4, [1.0, 0.0], [0.0, 1.0])
        assert pred == 0.0
        assert abs(est) < 0.05

    def test_oblique_direction_scales_by_cosine_power(self):
        xi = [1.0, 1.0]
        est, pred, _ = extremal_limit_check(
            Ball([0.0, 0.0], 1.0), 0.8, 0.4, [1.0, 0.0], xi)
        want = (0.5 ** 0.8) * eval_l(0.8, 0.4)  # |cos(45deg)|^(2s)
        assert pred == pytest.approx(want, rel=1e-12)


@pytest.mark.slow
class TestLiouville:
    def test_two_radius_decay(self):
        table, exponent = liouville_experiment(
            0.8, radii=(1.0, 2.0), nodes_per_radius=16, tol=1e-2)
        assert table[0][1] > table[1][1] > 0.0
        assert exponent > 0.0
