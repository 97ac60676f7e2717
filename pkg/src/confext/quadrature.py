"""Certified quadrature on the plane, half-space, sphere, and ball.

Rules are deterministic node/weight sets built from a single resolution
parameter ``m`` (Gauss points per panel, and the polar/azimuthal order of
the product sphere rules).  Unbounded directions are compactified with
r = tan(theta) and the theta interval is covered by geometrically graded
panels, so algebraic decay and algebraic endpoint behavior are integrated
at high order without ad-hoc truncation radii: the closing panel reaches
the endpoint itself.

Error estimates are two-resolution disagreements (m vs m+2), not rigorous
bounds.  ``integrate`` refuses to report a value whose refinement
disagreement exceeds the requested target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gammaln, roots_gegenbauer

from .fields import BALL, HALFSPACE, PLANE, SPHERE, UNBOUNDED, FieldFunction


class QuadratureError(Exception):
    """Base class for quadrature failures."""


class NonConvergent(QuadratureError):
    """Successive refinements disagree beyond the requested target."""


class BadDecay(QuadratureError):
    """Integrand decay too slow for absolute convergence on an unbounded domain."""


# ---------------------------------------------------------------------------
# closed-form measures
# ---------------------------------------------------------------------------


def sphere_area(n: int) -> float:
    """Surface measure of S^{n-1} in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / math.exp(gammaln(n / 2.0))


def ball_volume(n: int) -> float:
    """Volume of the unit ball B_n."""
    return math.pi ** (n / 2.0) / math.exp(gammaln(n / 2.0 + 1.0))


# ---------------------------------------------------------------------------
# panel machinery
# ---------------------------------------------------------------------------


def _gauss_on_intervals(breaks: np.ndarray, q: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights on consecutive intervals."""
    x, w = leggauss(q)
    lo = breaks[:-1][:, None]
    hi = breaks[1:][:, None]
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = (mid + half * x[None, :]).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def _graded_breaks(lo: float, hi: float, levels: int, toward: str) -> np.ndarray:
    """Interval breakpoints accumulating geometrically at one endpoint."""
    k = np.arange(levels + 1)
    if toward == "hi":
        pts = hi - (hi - lo) * 0.5 ** k
        return pts
    pts = lo + (hi - lo) * 0.5 ** k
    return pts[::-1]


def _closing_panel(
    endpoint: float, delta: float, q: int, toward: str
) -> Tuple[np.ndarray, np.ndarray]:
    """Squared-variable Gauss panel covering the last `delta` to an endpoint.

    The substitution s = delta * sigma^2 (s the distance to the endpoint)
    turns integrable algebraic singularities s^p, p > -1, into sigma^{2p+1},
    which plain Gauss handles at high order for the mild negative powers
    the compactified kernels produce.
    """
    x, w = leggauss(q)
    sigma = 0.5 * (x + 1.0)
    wsig = 0.5 * w
    s = delta * sigma**2
    ws = 2.0 * delta * sigma * wsig
    if toward == "hi":
        return endpoint - s, ws
    return endpoint + s, ws


def _graded_composite(
    lo: float, hi: float, levels: int, toward: str, q: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Geometric panels toward one endpoint plus a singular closing panel.

    Covers [lo, hi] exactly (no truncation): the closing panel reaches the
    endpoint itself with clustered squared-variable nodes.
    """
    breaks = _graded_breaks(lo, hi, levels, toward)
    nodes, weights = _gauss_on_intervals(np.asarray(breaks), q)
    delta = (hi - lo) * 0.5**levels
    endpoint = hi if toward == "hi" else lo
    cn, cw = _closing_panel(endpoint, delta, q, toward)
    return np.concatenate([nodes, cn]), np.concatenate([weights, cw])


# ---------------------------------------------------------------------------
# 1-D building blocks
# ---------------------------------------------------------------------------


def radial_halfline(d: int, q: int, grade_levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for integrals of the form int_0^inf h(r) r^{d-1} dr.

    Substitutes r = tan(theta); theta panels are [0, pi/8], [pi/8, pi/4],
    then geometrically graded toward pi/2.
    """
    base = np.array([0.0, math.pi / 8.0, math.pi / 4.0])
    t0, w0 = _gauss_on_intervals(base, q)
    t1, w1 = _graded_composite(math.pi / 4.0, math.pi / 2.0, grade_levels, "hi", q)
    theta = np.concatenate([t0, t1])
    w = np.concatenate([w0, w1])
    # cos(theta) > 0 strictly since all nodes are interior
    c = np.cos(theta)
    r = np.sin(theta) / c
    weights = w / c**2 * r ** (d - 1)
    return r, weights


def positive_line(q: int, grade0: int, grade_inf: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for int_0^inf h(x) dx, graded at 0 and compactified at inf."""
    t0, w0 = _graded_composite(0.0, math.pi / 4.0, grade0, "lo", q)
    t1, w1 = _graded_composite(math.pi / 4.0, math.pi / 2.0, grade_inf, "hi", q)
    theta = np.concatenate([t0, t1])
    w = np.concatenate([w0, w1])
    c = np.cos(theta)
    x = np.sin(theta) / c
    return x, w / c**2


def _unit_interval_graded(q: int, grade_levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite rule on [0, 1] graded toward 1 (for ball radial integrals)."""
    r0, w0 = _gauss_on_intervals(np.array([0.0, 0.5]), q)
    r1, w1 = _graded_composite(0.5, 1.0, grade_levels, "hi", q)
    return np.concatenate([r0, r1]), np.concatenate([w0, w1])


# ---------------------------------------------------------------------------
# sphere rules (recursive products, exact for low-degree polynomials)
# ---------------------------------------------------------------------------


def _polar_gauss(n: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss rule for int_{-1}^{1} h(t) (1-t^2)^{(n-3)/2} dt on S^{n-1} slices."""
    if n == 3:
        return leggauss(m)
    t, w = roots_gegenbauer(m, (n - 2) / 2.0)
    return t, w


def _sphere_nodes(n: int, m: int) -> Tuple[np.ndarray, np.ndarray]:
    if n == 2:
        k = max(6, 2 * m)
        ang = 2.0 * math.pi * (np.arange(k) + 0.5) / k
        nodes = np.column_stack([np.cos(ang), np.sin(ang)])
        weights = np.full(k, 2.0 * math.pi / k)
        return nodes, weights
    t, wt = _polar_gauss(n, m)
    sub_nodes, sub_w = _sphere_nodes(n - 1, m)
    s = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
    nodes = np.concatenate(
        [
            (s[:, None, None] * sub_nodes[None, :, :]).reshape(-1, n - 1),
            np.repeat(t, len(sub_w))[:, None],
        ],
        axis=1,
    )
    weights = (wt[:, None] * sub_w[None, :]).ravel()
    return nodes, weights


def _zonal_polar_panels(
    n: int, q: int, grade_levels: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Graded composite rule in the polar variable t on [-1, 1].

    Panels accumulate at both poles (weight has algebraic endpoint behavior
    for n >= 4) with extra depth toward t = +1, which is where near-boundary
    ball kernels peak once the rule is rotated to the evaluation point's axis.
    """
    t0, w0 = _graded_composite(-1.0, 0.0, max(4, grade_levels // 2), "lo", q)
    t1, w1 = _graded_composite(0.0, 1.0, grade_levels, "hi", q)
    t = np.concatenate([t0, t1])
    w = np.concatenate([w0, w1])
    w = w * (1.0 - t**2) ** ((n - 3) / 2.0)
    return t, w


def _rotation_to_axis(axis: np.ndarray) -> np.ndarray:
    """Orthogonal matrix mapping e_n to the given unit vector."""
    n = axis.shape[0]
    e = np.zeros(n)
    e[-1] = 1.0
    v = axis - e
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        return np.eye(n)
    v = v / nv
    return np.eye(n) - 2.0 * np.outer(v, v)


# ---------------------------------------------------------------------------
# the rule object
# ---------------------------------------------------------------------------


@dataclass
class QuadratureRule:
    """Nodes and weights on one of the four domains.

    ``m`` is the resolution parameter; ``refined()`` rebuilds the rule at
    m + 2 for two-resolution error estimation.  ``mesh`` is a dimensionless
    refinement scale used as the smoothing width of indicator integrands.
    """

    domain: str
    n: int  # ambient dimension of the construction (plane rules live in R^{n-1})
    nodes: np.ndarray
    weights: np.ndarray
    m: int
    target: float = 1e-6
    mesh: float = 0.05
    _builder: Optional[callable] = None
    _refined: Optional["QuadratureRule"] = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def refined(self) -> "QuadratureRule":
        if self._refined is None:
            if self._builder is None:
                raise QuadratureError("rule cannot be refined (no builder)")
            self._refined = self._builder(self.m + 2)
        return self._refined


def _make_rule(domain, n, nodes, weights, m, target, mesh, builder):
    return QuadratureRule(
        domain=domain,
        n=n,
        nodes=nodes,
        weights=weights,
        m=m,
        target=target,
        mesh=mesh,
        _builder=builder,
    )


def sphere_rule(n: int, m: int, target: float = 1e-6) -> QuadratureRule:
    """Product Gauss rule on S^{n-1}, exact for polynomials of degree <= 2m-1."""
    if n < 2:
        raise ValueError("sphere_rule requires n >= 2")
    nodes, weights = _sphere_nodes(n, m)
    return _make_rule(
        SPHERE, n, nodes, weights, m, target, math.pi / (2 * m),
        lambda mm: sphere_rule(n, mm, target),
    )


def _chunked_weighted_profile(
    weights: np.ndarray, absvals: np.ndarray, ts: np.ndarray, h: float
) -> np.ndarray:
    """mu(t) = sum_i w_i sigma((|f_i| - t)/h) evaluated chunked over t."""
    out = np.empty(len(ts))
    step = max(1, int(4e6 // max(len(absvals), 1)))
    for k in range(0, len(ts), step):
        block = ts[k : k + step]
        out[k : k + step] = (
            _smooth_indicator((absvals[None, :] - block[:, None]) / h) @ weights
        )
    return out


def sphere_rule_zonal(
    n: int,
    m: int,
    axis: np.ndarray,
    grade_levels: int = 22,
    target: float = 1e-6,
) -> QuadratureRule:
    """Sphere rule with polar panels graded toward the given axis.

    Built for integrands peaked where xi is close to the axis direction
    (Poisson-type ball kernels evaluated near the boundary).
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    t, wt = _zonal_polar_panels(n, m, grade_levels)
    sub_nodes, sub_w = _sphere_nodes(n - 1, m)
    s = np.sqrt(np.clip(1.0 - t**2, 0.0, None))
    nodes = np.concatenate(
        [
            (s[:, None, None] * sub_nodes[None, :, :]).reshape(-1, n - 1),
            np.repeat(t, len(sub_w))[:, None],
        ],
        axis=1,
    )
    weights = (wt[:, None] * sub_w[None, :]).ravel()
    rot = _rotation_to_axis(axis)
    nodes = nodes @ rot.T
    return _make_rule(
        SPHERE, n, nodes, weights, m, target, math.pi / (2 * m),
        lambda mm: sphere_rule_zonal(n, mm, axis, grade_levels, target),
    )


def ball_rule(
    n: int,
    m: int,
    m_ang: Optional[int] = None,
    grade_levels: int = 18,
    target: float = 1e-6,
) -> QuadratureRule:
    """Product rule on B_n: graded radial panels times a sphere rule."""
    ma = m if m_ang is None else m_ang
    r, wr = _unit_interval_graded(m, grade_levels)
    wr = wr * r ** (n - 1)
    snodes, sw = _sphere_nodes(n, ma)
    nodes = (r[:, None, None] * snodes[None, :, :]).reshape(-1, n)
    weights = (wr[:, None] * sw[None, :]).ravel()
    return _make_rule(
        BALL, n, nodes, weights, m, target, 0.5 / m,
        lambda mm: ball_rule(n, mm, ma + (mm - m), grade_levels, target),
    )


def plane_rule(
    n: int,
    m: int,
    m_ang: Optional[int] = None,
    grade_levels: int = 26,
    target: float = 1e-6,
) -> QuadratureRule:
    """Compactified rule on R^{n-1} (the boundary plane of the half-space).

    The default grading reaches radii ~10^7 through panels accumulating at
    theta = pi/2, with a closing panel covering the remaining tail, so
    kernel-type integrands with slow algebraic decay converge without any
    truncation radius.
    """
    d = n - 1
    if d < 1:
        raise ValueError("plane_rule requires n >= 2")
    ma = m if m_ang is None else m_ang
    r, wr = radial_halfline(d, m, grade_levels)
    if d == 1:
        nodes = np.concatenate([r, -r])[:, None]
        weights = np.concatenate([wr, wr])
    else:
        snodes, sw = _sphere_nodes(d, ma)
        nodes = (r[:, None, None] * snodes[None, :, :]).reshape(-1, d)
        weights = (wr[:, None] * sw[None, :]).ravel()
    return _make_rule(
        PLANE, n, nodes, weights, m, target, 0.5 / m,
        lambda mm: plane_rule(n, mm, ma + (mm - m), grade_levels, target),
    )


def halfspace_rule(
    n: int,
    m: int,
    m_ang: Optional[int] = None,
    plane_grade: int = 10,
    line_grade0: int = 8,
    line_grade_inf: int = 12,
    target: float = 1e-6,
) -> QuadratureRule:
    """Product rule on R^n_+ = R^{n-1} x (0, inf).

    The default grading depths suit integrands with fast radial decay
    (norms of extensions); kernel-style integrands with slow decay should
    integrate on a plane rule with deeper grading instead.
    """
    ma = m if m_ang is None else m_ang
    prule = plane_rule(n, m, ma, plane_grade)
    x, wx = positive_line(m, line_grade0, line_grade_inf)
    nodes = np.concatenate(
        [
            np.repeat(prule.nodes, len(x), axis=0),
            np.tile(x, prule.size)[:, None],
        ],
        axis=1,
    )
    weights = (prule.weights[:, None] * wx[None, :]).ravel()
    return _make_rule(
        HALFSPACE, n, nodes, weights, m, target, 0.5 / m,
        lambda mm: halfspace_rule(
            n, mm, ma + (mm - m), plane_grade, line_grade0, line_grade_inf, target
        ),
    )


# ---------------------------------------------------------------------------
# integration and norms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormSpec:
    """Lebesgue / Lorentz norm exponents: L^p, or L^{p,q} when q is given."""

    p: float
    q: Optional[float] = None

    def __post_init__(self):
        if not self.p > 0:
            raise ValueError("p must be positive")
        if self.q is not None and not self.q > 0:
            raise ValueError("q must be positive when given")


def _check_domain(f: FieldFunction, rule: QuadratureRule):
    if f.domain != rule.domain:
        raise ValueError(f"field on {f.domain!r} but rule on {rule.domain!r}")


def _check_decay(f: FieldFunction, rule: QuadratureRule, power: float = 1.0):
    """Absolute convergence guard: need power * beta > dimension of the domain."""
    if rule.domain not in UNBOUNDED:
        return
    if f.decay is None:
        raise BadDecay(f"field {f.name!r} on {rule.domain} carries no decay exponent")
    d = rule.dim
    if power * f.decay <= d:
        raise BadDecay(
            f"decay {f.decay} at power {power} insufficient on {rule.domain} "
            f"(needs > {d / power:.3g})"
        )


def integrate(
    f: FieldFunction, rule: QuadratureRule, target: Optional[float] = None
) -> Tuple[float, float]:
    """Integrate f over the rule's domain.

    Returns (value, error_estimate) where the estimate is the disagreement
    between resolutions m and m+2; the refined value is the one reported.
    Raises NonConvergent if the disagreement exceeds the target relative to
    the refined value (with an absolute floor at the target itself).
    """
    _check_domain(f, rule)
    _check_decay(f, rule)
    coarse = float(np.dot(rule.weights, f(rule.nodes)))
    fine_rule = rule.refined()
    fine = float(np.dot(fine_rule.weights, f(fine_rule.nodes)))
    err = abs(fine - coarse)
    tol = rule.target if target is None else target
    if err > tol * max(abs(fine), 1.0):
        raise NonConvergent(
            f"refinement disagreement {err:.3e} exceeds target {tol:.1e} "
            f"(value {fine:.6e})"
        )
    return fine, err


def integrate_values(rule: QuadratureRule, values: np.ndarray) -> float:
    """Contract precomputed node values against the rule weights."""
    return float(np.dot(rule.weights, values))


def lp_norm(
    f: FieldFunction, rule: QuadratureRule, spec: NormSpec
) -> Tuple[float, float]:
    """L^p norm over the rule's domain, with a refinement error estimate.

    For p = inf the norm is the max over the refined node set (a dense
    sample, not a certified supremum); the error estimate is the increase
    seen under refinement.
    """
    _check_domain(f, rule)
    p = spec.p
    if math.isinf(p):
        v0 = float(np.max(np.abs(f(rule.nodes))))
        fine = rule.refined()
        v1 = float(np.max(np.abs(f(fine.nodes))))
        return max(v0, v1), abs(v1 - v0)
    _check_decay(f, rule, power=p)
    c0 = float(np.dot(rule.weights, np.abs(f(rule.nodes)) ** p))
    fine_rule = rule.refined()
    c1 = float(np.dot(fine_rule.weights, np.abs(f(fine_rule.nodes)) ** p))
    if c1 < 0 or not np.isfinite(c1):
        raise NonConvergent(f"L^{p} integral not finite: {c1}")
    value = c1 ** (1.0 / p)
    coarse = c0 ** (1.0 / p) if c0 >= 0 else value
    return value, abs(value - coarse)


def _smooth_indicator(x: np.ndarray) -> np.ndarray:
    """C^1 ramp with sigma(u)=0 for u<=0 and 1 for u>=1 (ties fall outside)."""
    u = np.clip(x, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _indicator_width(rule: QuadratureRule, values: np.ndarray) -> float:
    spread = float(np.max(values) - np.min(values))
    if spread == 0.0:
        return 1.0
    return spread * rule.mesh / rule.m


def distribution_function(
    f: FieldFunction, rule: QuadratureRule, t: float
) -> float:
    """Measure of {|f| > t}, by quadrature of a smoothed indicator.

    The smoothing width is one refinement scale of the rule in value space;
    values exactly at t count as outside the set.  Refining the rule shrinks
    the width, so the result converges to the exact distribution function.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    _check_domain(f, rule)
    vals = np.abs(f(rule.nodes))
    h = _indicator_width(rule, vals)
    return float(np.dot(rule.weights, _smooth_indicator((vals - t) / h)))


def _distribution_profile(
    rule: QuadratureRule, absvals: np.ndarray, ts: np.ndarray
) -> np.ndarray:
    h = _indicator_width(rule, absvals)
    return _chunked_weighted_profile(rule.weights, absvals, ts, h)


def weak_lp_norm(f: FieldFunction, rule: QuadratureRule, p: float) -> float:
    """Weak norm sup_t t |{|f| > t}|^{1/p} over a log grid of levels."""
    _check_domain(f, rule)
    vals = np.abs(f(rule.nodes))
    vmax = float(np.max(vals))
    if vmax == 0.0:
        return 0.0
    ts = np.geomspace(vmax * 1e-8, vmax, 400)
    mu = _distribution_profile(rule, vals, ts)
    return float(np.max(ts * mu ** (1.0 / p)))


def lorentz_norm(
    f: FieldFunction, rule: QuadratureRule, spec: NormSpec
) -> float:
    """Lorentz norm p^{1/q} (int_0^inf t^q |{|f| >= t}|^{q/p} dt/t)^{1/q}.

    The level integral runs over a log grid between the smallest relevant
    level and the sample maximum; the two layer-cake conventions (> vs >=)
    agree up to sets of measure zero and are not distinguished here.
    """
    if spec.q is None or math.isinf(spec.q):
        raise ValueError("lorentz_norm requires a finite secondary exponent q")
    _check_domain(f, rule)
    p, q = spec.p, spec.q
    if rule.domain in UNBOUNDED:
        if f.decay is None or p * f.decay <= rule.dim:
            raise BadDecay("insufficient decay for a finite Lorentz norm")
    vals = np.abs(f(rule.nodes))
    vmax = float(np.max(vals))
    if vmax == 0.0:
        return 0.0
    # t-grid: geometric, wide enough that both tails are negligible
    ts = np.geomspace(vmax * 1e-10, vmax, 1200)
    mu = _distribution_profile(rule, vals, ts)
    integrand = ts**q * np.where(mu > 0, mu, 0.0) ** (q / p) / ts
    total = float(np.trapezoid(integrand, ts))
    return p ** (1.0 / q) * total ** (1.0 / q)
