"""Scalar fields on the four integration domains.

A :class:`FieldFunction` bundles a vectorized evaluator with the metadata
the quadrature layer needs: which domain the function lives on, the ambient
point dimension, and (for the unbounded domains) an algebraic decay exponent
used to decide whether an integral converges at all.

Domains and their point conventions:

``plane``      points in R^{n-1}, arrays of shape (N, n-1)
``halfspace``  points (X, x_n) in R^{n-1} x (0, inf), arrays of shape (N, n)
``sphere``     unit vectors in R^n, arrays of shape (N, n)
``ball``       points with |eta| < 1 in R^n, arrays of shape (N, n)

Evaluators always receive a 2-D array of points and return a 1-D array of
values; scalar convenience access goes through :meth:`FieldFunction.at`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

PLANE = "plane"
HALFSPACE = "halfspace"
SPHERE = "sphere"
BALL = "ball"

DOMAINS = (PLANE, HALFSPACE, SPHERE, BALL)

#: domains of infinite measure, where decay metadata is mandatory for norms
UNBOUNDED = (PLANE, HALFSPACE)


@dataclass
class FieldFunction:
    """An evaluable scalar function on one of the four domains.

    ``decay`` is the algebraic decay exponent beta such that
    |f(x)| = O(|x|^-beta) at infinity; it is only meaningful (and only
    checked) on the unbounded domains.  ``smooth`` is a free-form tag kept
    for diagnostics ("smooth", "piecewise", "singular-origin", ...).
    """

    domain: str
    dim: int
    func: Callable[[np.ndarray], np.ndarray]
    decay: Optional[float] = None
    smooth: str = "smooth"
    name: str = ""

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise ValueError(
                f"expected points of shape (N, {self.dim}), got {points.shape}"
            )
        vals = np.asarray(self.func(points), dtype=float)
        if vals.shape != (points.shape[0],):
            raise ValueError(
                f"evaluator returned shape {vals.shape}, expected ({points.shape[0]},)"
            )
        return vals

    def at(self, point) -> float:
        """Evaluate at a single point given as a sequence of coordinates."""
        return float(self(np.atleast_2d(np.asarray(point, dtype=float)))[0])

    def with_name(self, name: str) -> "FieldFunction":
        return replace(self, name=name)


def constant(domain: str, dim: int, value: float = 1.0) -> FieldFunction:
    """The constant field on a domain (decays like |x|^0 at infinity)."""
    return FieldFunction(
        domain=domain,
        dim=dim,
        func=lambda pts: np.full(pts.shape[0], float(value)),
        decay=0.0,
        name=f"const({value})",
    )


def from_expression(domain: str, dim: int, expr, decay=None, name="") -> FieldFunction:
    """Wrap a vectorized coordinate expression ``expr(points) -> values``."""
    return FieldFunction(domain=domain, dim=dim, func=expr, decay=decay, name=name)
