"""Closed-form test profiles with line-restriction smoothness data.

A profile is a callable u: R^N -> R that additionally reports, for any
base point x and unit direction xi, the positive offsets tau at which
t -> u(x + tau*xi) or u(x - tau*xi) loses smoothness.  The directional
integrals declare those offsets as quadrature split points, which is
what keeps kinked profiles (distance powers, |x|^beta, the decaying
supersolution) integrable to tight tolerances.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "SingularityAtPoint",
    "RadialProfile",
    "SmoothProfile",
    "gaussian",
    "radial_power",
    "supersolution",
    "DistancePower",
]


class SingularityAtPoint(ValueError):
    """Operator evaluation refused: the profile cannot be touched by a
    smooth function at this point (e.g. a cusp located exactly at x)."""


def _as_points(x):
    x = np.asarray(x, dtype=float)
    return x if x.ndim > 1 else x


class SmoothProfile:
    """Wrapper for an everywhere-smooth closed-form function.

    ``fn`` maps an (..., N) array of points to (...) values.
    """

    def __init__(self, fn, dimension):
        self.fn = fn
        self.dimension = int(dimension)

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def breakpoints(self, x, xi):
        return ()

    def check_evaluation_point(self, x):
        return None


class RadialProfile:
    """u(x) = g(|x - center|) with known non-smooth radii.

    ``kink_radii`` lists radii r where g is not C^2; ``singular_center``
    marks a cusp/singularity at r = 0 (evaluation of the operator exactly
    there is refused).  ``breakpoints`` returns the positive tau at which
    the line x + tau*xi (either sign) crosses a kink sphere or reaches
    its closest approach to the center.
    """

    def __init__(self, center, g, dimension, kink_radii=(),
                 singular_center=False):
        self.center = np.asarray(center, dtype=float)
        self.g = g
        self.dimension = int(dimension)
        self.kink_radii = tuple(float(r) for r in kink_radii)
        self.singular_center = bool(singular_center)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = x - self.center
        r = np.sqrt(np.sum(w * w, axis=-1))
        return np.asarray(self.g(r), dtype=float)

    def check_evaluation_point(self, x):
        if self.singular_center:
            x = np.asarray(x, dtype=float)
            if np.linalg.norm(x - self.center) < 1e-13:
                raise SingularityAtPoint(
                    "profile has a cusp at this point; the directional "
                    "integral is not defined there")

    def breakpoints(self, x, xi):
        """Positive tau where t -> u(x +/- tau*xi) may lose smoothness."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        w = x - self.center
        b = float(np.dot(w, xi))
        w2 = float(np.dot(w, w))
        taus = []
        for rho in self.kink_radii:
            disc = b * b - (w2 - rho * rho)
            if disc >= 0.0:
                root = math.sqrt(disc)
                for t in (-b - root, -b + root, b - root, b + root):
                    if t > 0.0:
                        taus.append(t)
        # closest approach of both half-lines to the center: radius is
        # non-smooth in tau there, and a centered cusp makes it a kink
        if abs(b) > 0.0:
            taus.append(abs(b))
        return tuple(sorted(set(taus)))


def gaussian(dimension, center=None):
    """exp(-|x - center|^2); smooth everywhere."""
    c = np.zeros(dimension) if center is None else np.asarray(center, float)
    return RadialProfile(c, lambda r: np.exp(-r * r), dimension)


def radial_power(dimension, beta, center=None):
    """|x - center|^beta; kinked (beta < 2) or singular at the center."""
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    c = np.zeros(dimension) if center is None else np.asarray(center, float)
    return RadialProfile(c, lambda r: r ** beta, dimension,
                         singular_center=(beta < 2.0))


def supersolution(dimension, eps):
    """(1 + |x|)**(-eps): the decaying radial profile whose operator sign
    is governed by the constant c(eps).  Cusp at the origin."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    return RadialProfile(np.zeros(dimension),
                         lambda r: (1.0 + r) ** (-eps), dimension,
                         singular_center=True)


class DistancePower:
    """u(x) = d(x)**alpha for a domain with exact distance function d.

    Non-smooth across the boundary spheres and (for an annulus) the
    mid-surface where the nearest boundary component switches.
    """

    def __init__(self, domain, alpha):
        if alpha <= 0.0:
            raise ValueError("alpha must be positive")
        self.domain = domain
        self.alpha = float(alpha)
        self.dimension = domain.dimension
        self._radial = getattr(domain, "kink_radii", None)

    def __call__(self, x):
        return self.domain.distance(x) ** self.alpha

    def check_evaluation_point(self, x):
        return None

    def breakpoints(self, x, xi):
        radii = self._radial
        if radii is None:
            return ()
        helper = RadialProfile(self.domain.center, lambda r: r,
                               self.dimension, kink_radii=radii)
        return helper.breakpoints(x, xi)
