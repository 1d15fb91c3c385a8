"""Measurable regularity diagnostics.

* Holder seminorm fitting over dyadic separation scales,
* barrier products d**(2s-alpha) * I d**alpha on a boundary strip,
* boundary limits of the directional operator on distance powers,
* the rescaling experiment: solve on growing balls against a fixed
  source bump and track the decay of unit-window Holder seminorms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .operators import Ball, GridFunction, direction, directional_operator
from .profiles import DistancePower
from .quadrature import DomainError, NonConverged
from .solver import SolveConfig, discrete_operator, solve
from .thresholds import eval_l

__all__ = [
    "InsufficientScales",
    "BarrierViolation",
    "HolderFit",
    "BarrierReport",
    "holder_fit",
    "barrier_check",
    "extremal_limit_check",
    "liouville_experiment",
]


class InsufficientScales(ValueError):
    """Grid too coarse to supply the required number of dyadic scales."""


class BarrierViolation(RuntimeError):
    """A strip product came out >= 0 where the barrier inequality
    guarantees a negative value."""


@dataclass
class HolderFit:
    alpha_hat: float
    seminorm_hat: float
    scales: list
    amplitudes: list
    residual: float
    degenerate: bool = False  # constant input: exponent undefined


def _sample_pairs(region, r, count, rng):
    """Random pairs (x, y) with x in the region and |x - y| in [r, 2r)."""
    N = region.dimension
    lo, hi = region.bounding_box()
    xs = []
    while len(xs) < count:
        cand = rng.uniform(lo, hi, size=(4 * count, N))
        cand = cand[region.contains(cand)]
        xs.extend(cand[:count - len(xs)])
    xs = np.asarray(xs)
    radii = rng.uniform(r, 2.0 * r, size=len(xs))
    if N == 1:
        dirs = rng.choice([-1.0, 1.0], size=(len(xs), 1))
    else:
        v = rng.normal(size=(len(xs), N))
        dirs = v / np.linalg.norm(v, axis=1, keepdims=True)
    ys = xs + radii[:, None] * dirs
    keep = region.contains(ys)
    return xs[keep], ys[keep]


def _refine_pair(u, region, x, y, rng, iters=80):
    """Local random search: perturb the pair's midpoint (separation kept
    fixed) to climb toward the supremum of |u(x) - u(y)| at this scale."""
    x = np.asarray(x, float).copy()
    y = np.asarray(y, float).copy()
    best = float(abs(u(x) - u(y)))
    sep = np.linalg.norm(y - x)
    step = sep
    for _ in range(iters):
        shift = rng.normal(size=x.shape) * step
        rot = rng.normal(size=x.shape) * (step / max(sep, 1e-300))
        half = y - x
        half = half + rot * sep
        half *= sep / np.linalg.norm(half)
        mid = 0.5 * (x + y) + shift
        nx, ny = mid - 0.5 * half, mid + 0.5 * half
        if region.contains(nx[None])[0] and region.contains(ny[None])[0]:
            val = float(abs(u(nx) - u(ny)))
            if val > best:
                best, x, y = val, nx, ny
                continue
        step *= 0.85
    return best


def holder_fit(u, region, min_scales=4, max_scales=6, pairs_per_scale=10000,
               seed=0):
    """Fit |u(x) - u(y)| <= C |x - y|^alpha over dyadic scales.

    For each scale r the amplitude S(r) is the max of |u(x) - u(y)| over
    axis-aligned pairs plus ``pairs_per_scale`` random pairs with
    separation in [r, 2r).  A log-log least-squares line through the
    (r, S(r)) points gives the exponent estimate and its constant.
    Scales within 4 grid spacings of a GridFunction's resolution are
    discarded (interpolation noise floor).
    """
    rng = np.random.default_rng(seed)
    lo, hi = region.bounding_box()
    width = float(np.min(hi - lo))
    r_max = width / 4.0
    floor = 4.0 * u.h if isinstance(u, GridFunction) else 0.0
    scales = []
    r = r_max
    while r >= max(floor, 1e-12) and len(scales) < max_scales:
        scales.append(r)
        r *= 0.5
    if len(scales) < min_scales:
        raise InsufficientScales(
            f"only {len(scales)} usable dyadic scales above the resolution "
            f"floor {floor:g}; need {min_scales}")

    amps = []
    for r in scales:
        best = 0.0
        # axis-aligned pairs on a regular sweep
        N = region.dimension
        grid_pts = []
        n_axis = 40
        axes = [np.linspace(lo[k], hi[k], n_axis) for k in range(N)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack(mesh, axis=-1).reshape(-1, N)
        pts = pts[region.contains(pts)]
        for k in range(N):
            e = np.zeros(N)
            e[k] = r
            q = pts + e
            keep = region.contains(q)
            if np.any(keep):
                diff = np.abs(u(pts[keep]) - u(q[keep]))
                best = max(best, float(np.max(diff)))
        xs, ys = _sample_pairs(region, r, pairs_per_scale, rng)
        if len(xs):
            diff = np.abs(u(xs) - u(ys))
            order = np.argsort(diff)[::-1][:4]
            for j in order:
                best = max(best, _refine_pair(u, region, xs[j], ys[j], rng))
        amps.append(best)

    amps = np.asarray(amps)
    scales_arr = np.asarray(scales)
    if np.max(amps) <= 0.0:
        return HolderFit(float("nan"), 0.0, list(scales), list(amps), 0.0,
                         degenerate=True)
    mask = amps > 0.0
    lx = np.log(scales_arr[mask])
    ly = np.log(amps[mask])
    if mask.sum() < 2:
        raise InsufficientScales("fewer than two nonzero amplitudes")
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    alpha_hat = float(coef[0])
    c_hat = float(math.exp(coef[1]))
    resid = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return HolderFit(alpha_hat, c_hat, list(scales), list(amps), resid)


@dataclass
class BarrierReport:
    mu: float
    alpha: float
    s: float
    m_hat: float
    worst_point: np.ndarray
    points: list = field(default_factory=list)
    products: list = field(default_factory=list)


def barrier_check(domain, s, alpha, mu, spacing, directions=16,
                  boundary_layer=1.0):
    """Products d(x)**(2s - alpha) * I_h[d**alpha](x) on the strip
    ``boundary_layer * h <= d(x) < mu``, via the grid operator I_h.

    Nodes closer to the boundary than one grid spacing are excluded:
    the stencil cannot resolve the distance function's kink below its
    own resolution.  All retained products must be negative; ``m_hat``
    is minus their maximum.  Raises ``BarrierViolation`` otherwise.
    """
    if not 0.0 < alpha < s:
        raise DomainError(f"alpha={alpha} must lie in (0, s)")
    if mu <= 0.0:
        raise DomainError("mu must be positive")
    prof = DistancePower(domain, alpha)
    cfg = SolveConfig(s=s, domain=domain, h=spacing, directions=directions)
    gf = GridFunction(domain, spacing)
    nodes = gf.node_coordinates()
    gf.values = np.where(gf.interior_mask, prof(nodes), 0.0)
    Iu = discrete_operator(gf, cfg)
    d = domain.distance(nodes)
    strip = gf.interior_mask & (d >= boundary_layer * spacing) & (d < mu)
    if not np.any(strip):
        raise DomainError("no strip nodes; decrease spacing or increase mu")
    products = d[strip] ** (2.0 * s - alpha) * Iu[strip]
    pts = nodes[strip]
    worst = int(np.argmax(products))
    if products[worst] >= 0.0:
        raise BarrierViolation(
            f"product {products[worst]:.3e} >= 0 at {pts[worst]}")
    return BarrierReport(mu, alpha, s, m_hat=-float(products[worst]),
                         worst_point=pts[worst], points=list(pts),
                         products=list(products))


def extremal_limit_check(domain, s, alpha, boundary_point, xi_bar,
                         deltas=(4e-3, 2e-3, 1e-3), spec=None):
    """Boundary limit of d**(2s-alpha) * I_xi d**alpha along the inner
    normal approach, against |nu . xi|**(2s) * l(alpha).

    Returns ``(extrapolated_estimate, predicted_value, estimates)``.
    """
    x_bar = np.asarray(boundary_point, dtype=float)
    nu = direction(domain.center - x_bar)  # inner normal for ball geometry
    xi = direction(xi_bar)
    prof = DistancePower(domain, alpha)
    ests = []
    for dlt in deltas:
        x = x_bar + dlt * nu
        try:
            val = directional_operator(prof, x, xi, s, spec=spec).value
        except NonConverged as exc:
            val = exc.result.value
        ests.append(float(domain.distance(x)) ** (2.0 * s - alpha) * val)
    est = ests[-1]
    if len(ests) >= 2:
        est = ests[-1] + (ests[-1] - ests[-2])  # first-order extrapolation
    factor = abs(float(np.dot(nu, xi))) ** (2.0 * s)
    predicted = factor * eval_l(s, alpha)
    return est, predicted, ests


def liouville_experiment(s, radii=(1.0, 2.0, 4.0, 8.0), nodes_per_radius=24,
                         h_cap=1.0 / 16.0, gamma=0.5, directions=8, tol=2e-3,
                         seed=0, pairs=4000):
    """Solve I u = f on growing balls B_R against one fixed narrow source
    bump f(x) = -exp(-16 |x|^2), rescale v(x) = u(Rx), and tabulate the
    Holder seminorm of v over a fixed unit-scale annular window
    (0.25 <= |x| <= 0.5, pair separation in [1/8, 1/2]).

    The spacing is ``min(R / nodes_per_radius, h_cap)`` so the bump stays
    resolved on every ball; the separation band keeps the difference
    quotients above the interpolation noise floor.  Returns
    ``(table, decay_exponent)`` where table rows are ``(R, seminorm)``
    and the exponent is minus the log-log slope (positive means decay).
    """
    rng = np.random.default_rng(seed)
    a, b, sep = _annulus_pairs(rng, pairs)
    table = []
    for R in radii:
        dom = Ball([0.0, 0.0], R)
        cfg = SolveConfig(s=s, domain=dom,
                          h=min(R / nodes_per_radius, h_cap),
                          directions=directions, tol=tol,
                          f=lambda p: -np.exp(-16.0 * np.sum(
                              np.asarray(p) ** 2, axis=-1)))
        rep = solve(cfg)
        u = rep.solution
        num = np.abs(u(R * a) - u(R * b))
        table.append((float(R), float(np.max(num / sep ** gamma))))
    rs = np.log([t[0] for t in table])
    ss = np.log([max(t[1], 1e-300) for t in table])
    slope = float(np.polyfit(rs, ss, 1)[0])
    return table, -slope


def _annulus_pairs(rng, count):
    """Point pairs in the annulus 0.25 <= |x| <= 0.5 (N = 2) with
    separation in [1/8, 1/2]; returns (a, b, separations)."""
    def draw(n):
        r = np.sqrt(rng.uniform(0.25 ** 2, 0.5 ** 2, n))
        th = rng.uniform(0.0, 2.0 * np.pi, n)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    out_a, out_b = [], []
    while len(out_a) < count:
        a = draw(4 * count)
        b = draw(4 * count)
        sep = np.linalg.norm(a - b, axis=1)
        keep = (sep >= 0.125) & (sep <= 0.5)
        need = count - len(out_a)
        out_a.extend(a[keep][:need])
        out_b.extend(b[keep][:need])
    a = np.asarray(out_a)
    b = np.asarray(out_b)
    return a, b, np.linalg.norm(a - b, axis=1)
