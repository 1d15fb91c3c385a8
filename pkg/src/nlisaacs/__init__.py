"""Numerical toolkit for a degenerate nonlocal Isaacs operator.

Submodules
----------
quadrature   adaptive 1-D integration for power-law kernels
kernel       order-2s normalizing constant
thresholds   scalar special functions and certified roots
profiles     closed-form test profiles and exact distance functions
operators    second differences, directional operator, min+max operator
solver       monotone explicit scheme for the zero-exterior Dirichlet problem
regularity   Holder fits, barrier checks, boundary limits, rescaling decay
cli          command-line entry point
"""

from .quadrature import (
    DomainError,
    IntegralResult,
    NonConverged,
    QuadratureSpec,
    integrate_adaptive,
    integrate_singular,
    integrate_tail,
)
from .kernel import normalizing_constant

__version__ = "0.1.0"
