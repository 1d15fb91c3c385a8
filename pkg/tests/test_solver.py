import numpy as np
import pytest

from nlisaacs.operators import Ball, Box, GridFunction
from nlisaacs.solver import (
    CFLViolation,
    MaxIterations,
    SolveConfig,
    SolveReport,
    discrete_operator,
    solve,
    verify_boundary_growth,
)


class TestDiscreteOperator:
    def test_matches_continuum_on_smooth_data_1d(self):
        from nlisaacs.operators import directional_operator
        dom = Ball([0.0], 1.0)
        s, h = 0.7, 1.0 / 128.0
        cfg = SolveConfig(s=s, domain=dom, h=h, directions=1)
        gf = GridFunction(dom, h)
        nodes = gf.node_coordinates()
        gf.values = np.where(gf.interior_mask,
                             np.cos(np.pi * nodes[..., 0] / 2.0) ** 2, 0.0)
        Ih = discrete_operator(gf, cfg, x=np.array([0.0]))
        # continuum value of the same truncated profile (zero outside)
        from nlisaacs.profiles import RadialProfile
        prof = RadialProfile([0.0], lambda r: np.where(
            r < 1.0, np.cos(np.pi * r / 2.0) ** 2, 0.0), 1,
            kink_radii=(1.0,))
        cont = 2.0 * directional_operator(prof, np.array([0.0]),
                                          np.array([1.0]), s).value
        assert Ih == pytest.approx(cont, rel=0.02)

    def test_zero_function_maps_to_zero(self):
        dom = Ball([0.0, 0.0], 1.0)
        cfg = SolveConfig(s=0.8, domain=dom, h=1.0 / 16.0, directions=8)
        gf = GridFunction(dom, cfg.h)
        out = discrete_operator(gf, cfg)
        assert np.all(out == 0.0)

    def test_concave_node_negative(self):
        # a hat bump at the center: the operator sees it from above
        dom = Ball([0.0, 0.0], 1.0)
        cfg = SolveConfig(s=0.8, domain=dom, h=1.0 / 16.0, directions=8)
        gf = GridFunction(dom, cfg.h)
        nodes = gf.node_coordinates()
        r = np.linalg.norm(nodes, axis=-1)
        gf.values = np.where(gf.interior_mask, np.maximum(1.0 - 2.0 * r, 0.0),
                             0.0)
        assert discrete_operator(gf, cfg, x=np.array([0.0, 0.0])) < 0.0


class TestSolve1D:
    def test_zero_source_gives_zero(self):
        dom = Ball([0.0], 1.0)
        rep = solve(SolveConfig(s=0.7, domain=dom, h=1.0 / 64.0,
                                directions=1, f=0.0, tol=1e-10))
        assert np.max(np.abs(rep.solution.values)) == 0.0

    def test_constant_source_shape(self):
        # f = -1 produces the (1 - x^2)^s bulge up to a constant factor
        s = 0.7
        dom = Ball([0.0], 1.0)
        rep = solve(SolveConfig(s=s, domain=dom, h=1.0 / 128.0,
                                directions=1, f=-1.0, tol=1e-8))
        gf = rep.solution
        x = gf.node_coordinates()[..., 0]
        exact_shape = np.clip(1.0 - x * x, 0.0, None) ** s
        scale = gf.values[np.argmin(np.abs(x))]  # center value
        err = np.max(np.abs(gf.values - scale * exact_shape))
        assert err / scale < 0.05
        assert rep.converged

    def test_positivity(self):
        dom = Ball([0.0], 1.0)
        rep = solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 64.0,
                                directions=1, f=-1.0, tol=1e-8))
        assert np.min(rep.solution.values) >= 0.0

    def test_comparison_in_source(self):
        # doubling |f| doubles the solution of the 1-direction problem
        dom = Ball([0.0], 1.0)
        r1 = solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 64.0,
                               directions=1, f=-1.0, tol=1e-10))
        r2 = solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 64.0,
                               directions=1, f=-2.0, tol=1e-10))
        assert np.allclose(r2.solution.values, 2.0 * r1.solution.values,
                           atol=1e-6)


class TestSolve2D:
    def test_disk_small(self):
        dom = Ball([0.0, 0.0], 1.0)
        rep = solve(SolveConfig(s=0.9, domain=dom, h=1.0 / 16.0,
                                directions=8, f=-1.0, tol=1e-6))
        gf = rep.solution
        assert rep.converged
        assert np.min(gf.values) >= 0.0
        # radial symmetry of the data propagates to the solution
        v1 = gf(np.array([0.5, 0.0]))
        v2 = gf(np.array([0.0, 0.5]))
        assert v1 == pytest.approx(v2, rel=1e-3)

    def test_residual_reported(self):
        dom = Ball([0.0, 0.0], 1.0)
        rep = solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 16.0,
                                directions=8, f=-1.0, tol=1e-5))
        gf = rep.solution
        cfg = SolveConfig(s=0.8, domain=dom, h=1.0 / 16.0, directions=8)
        res = discrete_operator(gf, cfg) - (-1.0)
        inner = gf.interior_mask
        assert np.max(np.abs(res[inner])) <= 10.0 * rep.residual + 1e-5

    def test_box_domain(self):
        dom = Box([-1.0, -0.5], [1.0, 0.5])
        rep = solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 16.0,
                                directions=8, f=-1.0, tol=1e-5))
        assert rep.converged and np.min(rep.solution.values) >= 0.0


class TestGuards:
    def test_cfl_violation(self):
        dom = Ball([0.0], 1.0)
        with pytest.raises(CFLViolation):
            solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 32.0,
                              directions=1, f=-1.0, dt=100.0))

    def test_max_iterations_carries_report(self):
        dom = Ball([0.0], 1.0)
        with pytest.raises(MaxIterations) as exc:
            solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 64.0, directions=1,
                              f=-1.0, tol=1e-13, max_iter=5,
                              cascadic=False, chebyshev=False))
        assert isinstance(exc.value.report, SolveReport)
        assert not exc.value.report.converged


class TestGrowthDiagnostic:
    def test_boundary_growth_ratio(self):
        dom = Ball([0.0], 1.0)
        rep = solve(SolveConfig(s=0.8, domain=dom, h=1.0 / 128.0,
                                directions=1, f=-1.0, tol=1e-8))
        # the solution behaves like d^s: the d^(s/2) ratio is finite,
        # a d^(2s) ratio would blow up near the boundary
        r_small = verify_boundary_growth(rep, 0.4)
        r_big = verify_boundary_growth(rep, 1.6)
        assert np.isfinite(r_small)
        assert r_big > 10.0 * r_small
