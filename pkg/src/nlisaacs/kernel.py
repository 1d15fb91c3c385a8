"""Kernel normalization for the order-2s directional operator."""

from __future__ import annotations

import math

from scipy.special import gamma

__all__ = ["normalizing_constant"]


def normalizing_constant(s):
    """Constant making the one-sided second-difference integral of order 2s
    converge to the pure second directional derivative as s -> 1-.

        C_s = 4**s * Gamma(s + 1/2) / (sqrt(pi) * |Gamma(-s)|)

    Evaluations default to the unnormalized convention; this factor is
    applied only on request.
    """
    if not 0.0 < s < 1.0:
        raise ValueError(f"order parameter s={s} outside (0, 1)")
    return 4.0 ** s * gamma(s + 0.5) / (math.sqrt(math.pi) * abs(gamma(-s)))
