"""Kernel parameters (n, a) and the normalization constant.

The extension kernel on R^{n-1} x (0, inf) is

    d(n, a) * x_n^{1-a} / ((X - Y)^2 + x_n^2)^{(n-a)/2}

with d(n, a) fixed so that extending the constant function 1 gives 1.
Writing the defining integral radially gives a Beta integral, hence the
closed form

    d(n, a) = Gamma((n - a)/2) / (pi^{(n-1)/2} Gamma((1 - a)/2)),

which is cross-checked against direct 1-D quadrature of the radial
integral (``normalization_quadrature``).  The admissible range is
2 - n <= a < 1; the endpoint a = 2 - n is the limit case in which the
kernel reproduces constants exactly after the conformal transfer to the
ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.integrate import quad
from scipy.special import gammaln

from .quadrature import sphere_area


def normalization(n: int, a: float) -> float:
    """Closed-form d(n, a) via Gamma functions; requires a < 1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if a >= 1:
        raise ValueError("a >= 1 makes the normalizing integral divergent")
    return math.exp(
        gammaln((n - a) / 2.0)
        - gammaln((1.0 - a) / 2.0)
        - 0.5 * (n - 1) * math.log(math.pi)
    )


def normalization_quadrature(n: int, a: float) -> float:
    """d(n, a) from 1-D radial quadrature of the normalizing integral.

    Independent of the closed form: integrates r^{n-2} (1 + r^2)^{-(n-a)/2}
    over (0, inf) in the substituted variable theta = arctan(r), where the
    integrand becomes sin^{n-2}(theta) cos^{-a}(theta).
    """
    if a >= 1:
        raise ValueError("a >= 1 makes the normalizing integral divergent")

    def integrand(theta):
        return math.sin(theta) ** (n - 2) * math.cos(theta) ** (-a)

    radial, _ = quad(integrand, 0.0, math.pi / 2.0, epsabs=1e-14, epsrel=1e-13)
    if n == 2:
        total = 2.0 * radial
    else:
        total = sphere_area(n - 1) * radial
    return 1.0 / total


@dataclass(frozen=True)
class KernelParams:
    """Dimension n, exponent a, and the derived quantities eps and d.

    eps = n - 2 + a is the conformal exponent; the Lebesgue exponents of
    the sharp inequality are 2n/eps on the half-space/ball side and
    2(n-1)/eps on the boundary side (only meaningful for eps > 0).
    """

    n: int
    a: float
    eps: float = field(init=False)
    d: float = field(init=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if not (2 - self.n <= self.a < 1):
            raise ValueError(f"a = {self.a} outside [2 - n, 1) for n = {self.n}")
        object.__setattr__(self, "eps", self.n - 2 + self.a)
        object.__setattr__(self, "d", normalization(self.n, self.a))

    @property
    def interior_exponent(self) -> float:
        """2n / (n - 2 + a), the L^p exponent on the half-space / ball."""
        self._require_positive_eps()
        return 2.0 * self.n / self.eps

    @property
    def boundary_exponent(self) -> float:
        """2(n - 1) / (n - 2 + a), the L^p exponent on the plane / sphere."""
        self._require_positive_eps()
        return 2.0 * (self.n - 1) / self.eps

    def _require_positive_eps(self):
        if not self.eps > 0:
            raise ValueError(
                f"conformal exponents need n - 2 + a > 0 (got eps = {self.eps})"
            )
