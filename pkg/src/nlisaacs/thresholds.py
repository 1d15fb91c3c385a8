"""Scalar special functions and certified thresholds of the operator.

Implements the log-kernel function h_c(s) and its root s0(c), the
boundary-profile integral l(alpha) (two independent formulas), the
interior-regularity function g_c(alpha) with its positive root
alpha*(c, s), and the decaying-supersolution constant c(eps) with its
sign-change threshold in eps.

All integrands are decomposed so that every cancellation-prone piece is
evaluated in a shifted variable (expm1/log1p forms, leading even powers
peeled off analytically near tau = 0, power singularities at tau = 1
rewritten in u = |tau - 1|).  Every root comes with a sign-certified
bracket evaluated at the same quadrature tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import normalizing_constant
from .quadrature import (
    DomainError,
    QuadratureSpec,
    integrate_adaptive,
    integrate_singular,
    integrate_tail,
)

__all__ = [
    "BracketFailure",
    "NoRoot",
    "RootResult",
    "ThresholdReport",
    "eval_h",
    "find_s0",
    "eval_l",
    "eval_l_reduced",
    "eval_g",
    "eval_g_right_derivative_at_zero",
    "find_alpha_star",
    "eval_supersolution_constant",
    "find_eps_threshold",
    "build_threshold_report",
]

_SQRT2 = math.sqrt(2.0)
_DEFAULT_SPEC = QuadratureSpec(rel_tol=1e-10, abs_tol=1e-12)


class BracketFailure(RuntimeError):
    """Endpoint signs contradict the guaranteed sign pattern."""


class NoRoot(RuntimeError):
    """No sign change exists in the admissible parameter range."""


@dataclass(frozen=True)
class RootResult:
    """A root together with its sign-change certificate."""

    value: float
    bracket: tuple
    f_lo: float
    f_hi: float
    quadrature_error: float = 0.0

    @property
    def width(self):
        return self.bracket[1] - self.bracket[0]

    @property
    def certified(self):
        return self.f_lo * self.f_hi < 0.0

    def __float__(self):
        return float(self.value)


def _pow1p(x, a):
    """(1+x)**a - 1 without cancellation for small x."""
    return np.expm1(a * np.log1p(x))


def _bisect(fn, lo, hi, f_lo, f_hi, width, max_iter=200):
    """Plain bisection; fn returns (value, err).  Returns a RootResult."""
    err = 0.0
    for _ in range(max_iter):
        if hi - lo <= width:
            break
        mid = 0.5 * (lo + hi)
        f_mid, e = fn(mid)
        err = max(err, e)
        if f_mid == 0.0:
            lo = hi = mid
            f_lo = f_hi = f_mid
            break
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return RootResult(0.5 * (lo + hi), (lo, hi), f_lo, f_hi, err)


# ----------------------------------------------------------------------
# h_c(s) and s0(c)

def _h_result(c, s, spec):
    if not 1.0 < c <= 2.0:
        raise DomainError(f"c={c} outside (1, 2]")
    if not 0.5 <= s <= 1.0:
        raise DomainError(f"s={s} outside [1/2, 1]")

    def log_abs_1mt2(t):
        # log|1 - tau^2|, stable on both sides of tau = 1
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        lo = t < 1.0
        out[lo] = np.log1p(-t[lo] * t[lo])
        out[~lo] = np.log((t[~lo] - 1.0) * (t[~lo] + 1.0))
        return out

    body = integrate_singular(log_abs_1mt2, 0.0, c, 1.0 + s,
                              QuadratureSpec(rel_tol=spec.rel_tol,
                                             abs_tol=spec.abs_tol,
                                             max_subdivisions=spec.max_subdivisions,
                                             singular_splits=(1.0,)))
    tail = integrate_tail(np.log1p, c, s, spec)
    return body.value + tail.value, body.error_estimate + tail.error_estimate


def eval_h(c, s, spec=None):
    """h_c(s): log-kernel integral split at tau = c; sign decides the
    admissible order range."""
    return _h_result(c, s, spec or _DEFAULT_SPEC)[0]


def h_half_closed_form(c):
    """Closed form of h_c(1/2)."""
    rc = math.sqrt(c)
    return 2.0 * (math.pi + (rc - 1.0) / rc * math.log(rc - 1.0)
                  - (rc + 1.0) / rc * math.log(rc + 1.0))


def h_one_closed_form(c):
    """Closed form of h_c(1)."""
    return (c - 1.0) / c * math.log(c - 1.0) - math.log(c)


def find_s0(c, spec=None, bracket_width=1e-10):
    """Unique zero of s -> h_c(s) in (1/2, 1), with certified bracket."""
    spec = spec or _DEFAULT_SPEC
    f_lo, e_lo = _h_result(c, 0.5, spec)
    f_hi, e_hi = _h_result(c, 1.0, spec)
    if not (f_lo > 0.0 and f_hi < 0.0):
        raise BracketFailure(
            f"h_{c}(1/2)={f_lo:.3e}, h_{c}(1)={f_hi:.3e}: expected (+,-)")
    root = _bisect(lambda s: _h_result(c, s, spec), 0.5, 1.0, f_lo, f_hi,
                   bracket_width)
    return RootResult(root.value, root.bracket, root.f_lo, root.f_hi,
                      max(root.quadrature_error, e_lo, e_hi))


# ----------------------------------------------------------------------
# l(alpha), two formulas

def _l_result(s, alpha, spec):
    if not 0.0 < s < 1.0:
        raise DomainError(f"s={s} outside (0, 1)")
    if not 0.0 < alpha < 2.0 * s:
        raise DomainError(f"alpha={alpha} outside (0, 2s)")
    p = 1.0 + 2.0 * s
    b = 0.5
    T = spec.tail_cutoff
    # leading even Taylor coefficients of (1+t)^a + (1-t)^a - 2
    c1 = alpha * (alpha - 1.0)
    c2 = alpha * (alpha - 1.0) * (alpha - 2.0) * (alpha - 3.0) / 12.0

    def n_deflated(t):
        n = _pow1p(t, alpha) + _pow1p(-t, alpha)
        return n - c1 * t * t - c2 * t ** 4

    head = (c1 * b ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
            + c2 * b ** (4.0 - 2.0 * s) / (4.0 - 2.0 * s))
    r0 = integrate_singular(n_deflated, 0.0, b, p, spec)

    def n_mid(t):  # on (1/2, 1]: cusp (1-t)^alpha is harmless
        return _pow1p(t, alpha) + (1.0 - t) ** alpha - 1.0

    r1 = integrate_adaptive(lambda t: n_mid(t) * t ** (-p), b, 1.0, spec)

    def n_far(t):
        return (1.0 + t) ** alpha - 2.0

    r2 = integrate_adaptive(lambda t: n_far(t) * t ** (-p), 1.0, T, spec)
    r3 = integrate_tail(n_far, T, 2.0 * s, spec)
    value = head + r0.value + r1.value + r2.value + r3.value
    err = sum(r.error_estimate for r in (r0, r1, r2, r3))
    return value, err


def eval_l(s, alpha, spec=None):
    """One-sided profile integral l(alpha); its sign flips at alpha = s."""
    return _l_result(s, alpha, spec or _DEFAULT_SPEC)[0]


def _l_reduced_result(s, alpha, spec):
    if not 0.0 < s < 1.0:
        raise DomainError(f"s={s} outside (0, 1)")
    if not 0.0 < alpha < 2.0 * s:
        raise DomainError(f"alpha={alpha} outside (0, 2s)")
    a1 = alpha - 1.0
    a2 = 2.0 * s - alpha - 1.0
    b = 0.5
    T = spec.tail_cutoff
    # leading Taylor coefficients of (1+t)^a1 - (1+t)^a2
    c1 = a1 - a2
    c2 = 0.5 * (a1 * (a1 - 1.0) - a2 * (a2 - 1.0))

    def n(t):
        return _pow1p(t, a1) - _pow1p(t, a2)

    def n_deflated(t):
        return n(t) - c1 * t - c2 * t * t

    head = (c1 * b ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
            + c2 * b ** (3.0 - 2.0 * s) / (3.0 - 2.0 * s))
    r0 = integrate_singular(n_deflated, 0.0, b, 2.0 * s, spec)
    r1 = integrate_adaptive(lambda t: n(t) * t ** (-2.0 * s), b, T, spec)
    r2 = integrate_tail(lambda t: n(t) * t, T, 2.0 * s, spec)
    factor = alpha / (2.0 * s)
    value = factor * (head + r0.value + r1.value + r2.value)
    err = abs(factor) * sum(r.error_estimate for r in (r0, r1, r2))
    return value, err


def eval_l_reduced(s, alpha, spec=None):
    """Independent reduced formula for l(alpha); mutual oracle of eval_l."""
    return _l_reduced_result(s, alpha, spec or _DEFAULT_SPEC)[0]


# ----------------------------------------------------------------------
# g_c(alpha) and alpha*(c, s)

def _g_result(c, s, alpha, spec):
    if not 1.0 < c <= _SQRT2 + 1e-12:
        raise DomainError(f"c={c} outside (1, sqrt(2)]")
    if not 0.5 < s < 1.0:
        raise DomainError(f"s={s} outside (1/2, 1)")
    if not 0.0 < alpha < 2.0 * s:
        raise DomainError(f"alpha={alpha} outside (0, 2s)")
    p = 1.0 + 2.0 * s
    b = 0.5
    T = spec.tail_cutoff
    c1 = alpha * (alpha - 1.0)
    c2 = alpha * (alpha - 1.0) * (alpha - 2.0) * (alpha - 3.0) / 12.0

    def n_deflated(t):
        n = _pow1p(t, alpha) + _pow1p(-t, alpha)
        return n - c1 * t * t - c2 * t ** 4

    head = (c1 * b ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
            + c2 * b ** (4.0 - 2.0 * s) / (4.0 - 2.0 * s))
    r0 = integrate_singular(n_deflated, 0.0, b, p, spec)

    def n_cusp(t):  # |1+t|^a + |1-t|^a - 2 around the cusp at t = 1
        return _pow1p(t, alpha) + np.abs(1.0 - t) ** alpha - 1.0

    r1 = integrate_singular(n_cusp, b, c, p,
                            QuadratureSpec(rel_tol=spec.rel_tol,
                                           abs_tol=spec.abs_tol,
                                           max_subdivisions=spec.max_subdivisions,
                                           singular_splits=(1.0,)))

    half = 0.5 * alpha
    m1 = half
    m2 = 0.5 * half * (half - 1.0)

    def m_deflated(t):
        t2 = t * t
        return _pow1p(t2, half) - m1 * t2 - m2 * t2 * t2

    head2 = (m1 * b ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
             + m2 * b ** (4.0 - 2.0 * s) / (4.0 - 2.0 * s))
    q0 = integrate_singular(m_deflated, 0.0, b, p, spec)
    q1 = integrate_adaptive(lambda t: _pow1p(t * t, half) * t ** (-p),
                            b, T, spec)
    q2 = integrate_tail(lambda t: _pow1p(t * t, half), T, 2.0 * s, spec)

    value = (head + r0.value + r1.value
             + 2.0 * (head2 + q0.value + q1.value + q2.value))
    err = (r0.error_estimate + r1.error_estimate
           + 2.0 * (q0.error_estimate + q1.error_estimate + q2.error_estimate))
    return value, err


def eval_g(c, s, alpha, spec=None):
    """Interior-regularity function g_c(alpha): cusped body plus positive
    isotropic part.  Convex, g_c(0+) = 0."""
    return _g_result(c, s, alpha, spec or _DEFAULT_SPEC)[0]


def eval_g_right_derivative_at_zero(c, s, spec=None):
    """Right derivative of g_c at 0, equal to h_{c^2}(s) / 2."""
    c2 = min(c * c, 2.0) if c * c <= 2.0 + 1e-12 else c * c
    if not 1.0 < c2 <= 2.0:
        raise DomainError(f"c^2={c2} outside (1, 2]")
    return 0.5 * eval_h(c2, s, spec)


def find_alpha_star(c, s, spec=None, bracket_width=1e-10):
    """Positive root of g_c, defined when s > s0(c^2); g_c < 0 below it."""
    spec = spec or _DEFAULT_SPEC
    c2 = c * c
    if not 1.0 < c2 <= 2.0 + 1e-12:
        raise DomainError(f"c={c} outside (1, sqrt(2)]")
    slope = eval_g_right_derivative_at_zero(c, s, spec)
    if slope >= 0.0:
        raise NoRoot(
            f"right slope of g at 0 is {slope:.3e} >= 0 (s={s} <= s0({c2}))")
    cap = 2.0 * s - 1e-3
    lo = 1e-4
    f_lo, e_lo = _g_result(c, s, lo, spec)
    if f_lo >= 0.0:
        raise NoRoot(f"g_c({lo}) = {f_lo:.3e} >= 0 despite negative slope")
    hi = lo
    f_hi = f_lo
    while f_hi < 0.0 and hi < cap:
        hi = min(2.0 * hi, cap)
        f_hi, e_hi = _g_result(c, s, hi, spec)
    if f_hi < 0.0:
        raise NoRoot(f"g_c stays negative up to alpha={cap}")
    lo = hi / 2.0 if hi > 2e-4 else 1e-4
    f_lo, _ = _g_result(c, s, lo, spec)
    return _bisect(lambda a: _g_result(c, s, a, spec), lo, hi, f_lo, f_hi,
                   bracket_width)


# ----------------------------------------------------------------------
# supersolution constant c(eps) and its threshold

def _supersolution_result(s, eps, spec, normalized=True):
    if not 0.0 < s < 1.0:
        raise DomainError(f"s={s} outside (0, 1)")
    if not 0.0 < eps < 2.0 * s:
        raise DomainError(f"eps={eps} outside (0, 2s)")
    if eps >= 1.0:
        raise DomainError(f"eps={eps} >= 1: profile not integrable at tau=-1")
    p = 1.0 + 2.0 * s
    a = -eps
    b = 0.5
    T = spec.tail_cutoff
    c1 = eps * (eps + 1.0)
    c2 = eps * (eps + 1.0) * (eps + 2.0) * (eps + 3.0) / 12.0

    def n_deflated(t):
        n = _pow1p(t, a) + _pow1p(-t, a)
        return n - c1 * t * t - c2 * t ** 4

    head = (c1 * b ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
            + c2 * b ** (4.0 - 2.0 * s) / (4.0 - 2.0 * s))
    r0 = integrate_singular(n_deflated, 0.0, b, p, spec)

    # tau in (1/2, 3/2): u = |1 - tau| keeps u**(-eps) exact
    pieces = []
    for sign in (-1.0, 1.0):  # tau = 1 + sign*u is 1-u then 1+u
        def smooth(u, sign=sign):
            return (_pow1p(1.0 + sign * u, a) - 1.0) \
                * (1.0 + sign * u) ** (-p)

        pieces.append(integrate_adaptive(smooth, 0.0, b, spec))
        pieces.append(integrate_singular(
            lambda u, sign=sign: (1.0 + sign * u) ** (-p),
            0.0, b, eps, spec))

    def n_far(t):
        return (1.0 + t) ** a + (t - 1.0) ** a - 2.0

    r2 = integrate_adaptive(lambda t: n_far(t) * t ** (-p), 1.5, T, spec)
    r3 = integrate_tail(n_far, T, 2.0 * s, spec)

    half = -0.5 * eps
    m1 = half
    m2 = 0.5 * half * (half - 1.0)

    def m_deflated(t):
        t2 = t * t
        return _pow1p(t2, half) - m1 * t2 - m2 * t2 * t2

    head2 = (m1 * b ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
             + m2 * b ** (4.0 - 2.0 * s) / (4.0 - 2.0 * s))
    q0 = integrate_singular(m_deflated, 0.0, b, p, spec)
    q1 = integrate_adaptive(lambda t: _pow1p(t * t, half) * t ** (-p),
                            b, T, spec)
    q2 = integrate_tail(lambda t: _pow1p(t * t, half), T, 2.0 * s, spec)

    results = [r0, r2, r3, q0, q1, q2] + pieces
    value = (head + r0.value + sum(r.value for r in pieces)
             + r2.value + r3.value
             + 2.0 * (head2 + q0.value + q1.value + q2.value))
    err = sum(r.error_estimate for r in results) \
        + (q0.error_estimate + q1.error_estimate + q2.error_estimate)
    if normalized:
        cs = normalizing_constant(s)
        value *= cs
        err *= cs
    return value, err


def eval_supersolution_constant(s, eps, spec=None, normalized=True):
    """c(eps): sign-determining constant of the profile (1+|x|)**(-eps).

    Negative for small eps; the principal value at the kernel origin is
    handled by the symmetrized (second-difference) form of the integral.
    """
    return _supersolution_result(s, eps, spec or _DEFAULT_SPEC,
                                 normalized=normalized)[0]


def find_eps_threshold(s, spec=None, bracket_width=1e-8):
    """Smallest sign change of eps -> c(eps) starting from 0+."""
    spec = spec or _DEFAULT_SPEC
    if not 0.5 < s < 1.0:
        raise DomainError(f"s={s} outside (1/2, 1)")
    lo = 1e-3
    f_lo, _ = _supersolution_result(s, lo, spec)
    while f_lo >= 0.0 and lo > 1e-7:
        lo *= 0.25  # threshold shrinks toward 0 as s -> 1; probe closer in
        f_lo, _ = _supersolution_result(s, lo, spec)
    if f_lo >= 0.0:
        raise BracketFailure(
            f"c({lo}) = {f_lo:.3e} >= 0: no negative range near 0")
    cap = min(1.0, 2.0 * s) - 1e-6
    hi = lo
    f_hi = f_lo
    while f_hi <= 0.0 and hi < cap:
        lo, f_lo = hi, f_hi
        hi = min(2.0 * hi, cap)
        f_hi, _ = _supersolution_result(s, hi, spec)
    if f_hi <= 0.0:
        raise NoRoot(f"c(eps) < 0 on the whole of (0, {cap})")
    return _bisect(lambda e: _supersolution_result(s, e, spec), lo, hi,
                   f_lo, f_hi, bracket_width)


# ----------------------------------------------------------------------
# report assembly

@dataclass
class ThresholdReport:
    c: float
    s: float
    s0: RootResult
    alpha_star: RootResult | None
    eps_threshold: RootResult | None
    quadrature_error: float

    def to_dict(self):
        def root(r):
            if r is None:
                return None
            return {"value": r.value, "bracket": list(r.bracket),
                    "f_lo": r.f_lo, "f_hi": r.f_hi, "width": r.width}

        return {
            "c": self.c,
            "s": self.s,
            "s0": root(self.s0),
            "alpha_star": root(self.alpha_star),
            "eps_threshold": root(self.eps_threshold),
            "quadrature_error": self.quadrature_error,
        }

    CSV_COLUMNS = ("c", "s", "s0", "alpha_star", "eps_threshold",
                   "quadrature_error")

    def csv_row(self):
        a = self.alpha_star.value if self.alpha_star is not None else math.nan
        e = (self.eps_threshold.value
             if self.eps_threshold is not None else math.nan)
        return (self.c, self.s, self.s0.value, a, e, self.quadrature_error)


def build_threshold_report(c, s, spec=None):
    """All thresholds for one (c, s) pair.

    s0 is computed for the parameter c itself; the root alpha* (which
    requires c in (1, sqrt 2] and s above s0(c^2)) is included when
    defined, and the eps threshold whenever s > 1/2.
    """
    spec = spec or _DEFAULT_SPEC
    s0 = find_s0(c, spec)
    alpha_star = None
    if c <= _SQRT2 + 1e-12:
        try:
            alpha_star = find_alpha_star(c, s, spec)
        except NoRoot:
            alpha_star = None
    eps_threshold = None
    if 0.5 < s < 1.0:
        try:
            eps_threshold = find_eps_threshold(s, spec)
        except NoRoot:
            eps_threshold = None
    err = max(s0.quadrature_error,
              alpha_star.quadrature_error if alpha_star else 0.0,
              eps_threshold.quadrature_error if eps_threshold else 0.0)
    return ThresholdReport(c, s, s0, alpha_star, eps_threshold, err)
