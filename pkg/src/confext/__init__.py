"""confext: conformal extension operators and sharp-inequality verification.

The package implements the poly-harmonic extension operator on the upper
half-space, its conformal transfer to the unit ball, the geometry linking
the two domains, symmetric decreasing rearrangement, and numerical
verification suites for the associated family of sharp integral
inequalities (trace-type inequalities on the ball, their exponential
limit, Carleman's planar inequality, and the four-dimensional
sub-biharmonic corollary).
"""

from .fields import BALL, HALFSPACE, PLANE, SPHERE, FieldFunction, constant
from .params import KernelParams, normalization, normalization_quadrature
from .quadrature import (
    BadDecay,
    NonConvergent,
    NormSpec,
    QuadratureError,
    QuadratureRule,
    ball_rule,
    ball_volume,
    distribution_function,
    halfspace_rule,
    integrate,
    lorentz_norm,
    lp_norm,
    plane_rule,
    sphere_area,
    sphere_rule,
    weak_lp_norm,
)

__version__ = "0.1.0"
