"""Conformal geometry linking the upper half-space and the unit ball.

The basic map is shift-then-invert:

    phi(X, x_n) = (X, x_n + 1/2) / |(X, x_n + 1/2)|^2 - e_n,

taking {x_n > 0} onto the open unit ball and the boundary plane onto the
unit sphere (exactly: for x_n = 0 the image norm is 1 in closed form).
The shift is baked in here once, so every downstream formula can use the
interior weight |(X, x_n + 1/2)| and the boundary weight |(Y, 1/2)|
without tracking offsets.

Array conventions: half-space points are rows (X, x_n) of shape (N, n),
plane points rows of shape (N, n-1), ball/sphere points rows of shape
(N, n).  Typed single-point wrappers (:class:`HalfspacePoint`,
:class:`BallPoint`) validate invariants at API boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fields import BALL, HALFSPACE, PLANE, SPHERE, FieldFunction
from .params import KernelParams

BOUNDARY_TOL = 1e-12


# ---------------------------------------------------------------------------
# typed points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HalfspacePoint:
    """A point (X, x_n) with x_n > 0 strictly."""

    X: np.ndarray
    xn: float

    def __post_init__(self):
        X = np.atleast_1d(np.asarray(self.X, dtype=float))
        object.__setattr__(self, "X", X)
        if not self.xn > 0:
            raise ValueError("half-space points need x_n > 0")

    @property
    def n(self) -> int:
        return self.X.shape[0] + 1

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.X, [self.xn]])


@dataclass(frozen=True)
class BallPoint:
    """A point eta with |eta| < 1, or a boundary point renormalized to |eta| = 1.

    Points within BOUNDARY_TOL of the sphere are snapped onto it and tagged,
    so quadrature nodes on the sphere stay exactly on-manifold; anything
    farther outside is rejected.
    """

    eta: np.ndarray
    boundary: bool = field(init=False)

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        r = float(np.linalg.norm(eta))
        if r < 1.0:
            object.__setattr__(self, "boundary", False)
        elif abs(r - 1.0) <= BOUNDARY_TOL:
            eta = eta / r
            object.__setattr__(self, "boundary", True)
        else:
            raise ValueError(f"|eta| = {r} is outside the closed ball")
        object.__setattr__(self, "eta", eta)

    @property
    def n(self) -> int:
        return self.eta.shape[0]


# ---------------------------------------------------------------------------
# the conformal map and its Jacobians (array forms)
# ---------------------------------------------------------------------------


def shifted_norm_sq(points: np.ndarray) -> np.ndarray:
    """|(X, x_n + 1/2)|^2 for half-space points of shape (N, n)."""
    points = np.asarray(points, dtype=float)
    s = np.sum(points[:, :-1] ** 2, axis=1)
    return s + (points[:, -1] + 0.5) ** 2


def boundary_shifted_norm_sq(Y: np.ndarray) -> np.ndarray:
    """|(Y, 1/2)|^2 for plane points of shape (N, n-1)."""
    Y = np.asarray(Y, dtype=float)
    return np.sum(Y**2, axis=1) + 0.25


def phi_map(points: np.ndarray) -> np.ndarray:
    """Map half-space points (rows (X, x_n), x_n >= 0) into the closed ball."""
    points = np.asarray(points, dtype=float)
    shifted = points.copy()
    shifted[:, -1] += 0.5
    q = shifted / np.sum(shifted**2, axis=1)[:, None]
    q[:, -1] -= 1.0
    return q


def phi_boundary_map(Y: np.ndarray) -> np.ndarray:
    """Map plane points onto the unit sphere (the boundary trace of phi)."""
    Y = np.asarray(Y, dtype=float)
    N, d = Y.shape
    shifted = np.concatenate([Y, np.full((N, 1), 0.5)], axis=1)
    q = shifted / np.sum(shifted**2, axis=1)[:, None]
    q[:, -1] -= 1.0
    return q


def phi_inverse_map(points: np.ndarray) -> np.ndarray:
    """Inverse map from the open ball to the half-space (rows (X, x_n))."""
    q = np.asarray(points, dtype=float)
    r = np.linalg.norm(q, axis=1)
    if np.any(r >= 1.0):
        raise ValueError("phi_inverse requires interior points |eta| < 1")
    shifted = q.copy()
    shifted[:, -1] += 1.0
    p = shifted / np.sum(shifted**2, axis=1)[:, None]
    p[:, -1] -= 0.5
    return p


def phi_inverse_boundary_map(xi: np.ndarray) -> np.ndarray:
    """Inverse boundary trace: sphere points (away from -e_n) to the plane."""
    xi = np.asarray(xi, dtype=float)
    shifted = xi.copy()
    shifted[:, -1] += 1.0
    denom = np.sum(shifted**2, axis=1)
    if np.any(denom < 1e-30):
        raise ValueError("the south pole maps to infinity")
    return shifted[:, :-1] / denom[:, None]


def jacobian_phi_map(points: np.ndarray) -> np.ndarray:
    """Interior Jacobian |(X, x_n + 1/2)|^{-2n} on rows of shape (N, n)."""
    n = points.shape[1]
    return shifted_norm_sq(points) ** (-n)


def jacobian_phi_boundary_map(Y: np.ndarray) -> np.ndarray:
    """Boundary Jacobian |(Y, 1/2)|^{-2(n-1)} on rows of shape (N, n-1)."""
    d = Y.shape[1]
    return boundary_shifted_norm_sq(Y) ** (-d)


# typed single-point wrappers


def phi(p: HalfspacePoint) -> BallPoint:
    return BallPoint(phi_map(p.as_array()[None, :])[0])


def phi_inverse(q: BallPoint) -> HalfspacePoint:
    if q.boundary:
        raise ValueError("phi_inverse requires an interior point")
    arr = phi_inverse_map(q.eta[None, :])[0]
    return HalfspacePoint(arr[:-1], float(arr[-1]))


def jacobian_phi(p: HalfspacePoint) -> float:
    return float(jacobian_phi_map(p.as_array()[None, :])[0])


def jacobian_phi_boundary(Y) -> float:
    Y = np.atleast_1d(np.asarray(Y, dtype=float))
    return float(jacobian_phi_boundary_map(Y[None, :])[0])


@dataclass(frozen=True)
class ConformalMapData:
    """The map phi and its Jacobians bound to a fixed dimension n >= 2."""

    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")

    def _check(self, pts: np.ndarray, d: int):
        if pts.ndim != 2 or pts.shape[1] != d:
            raise ValueError(f"expected shape (N, {d}), got {pts.shape}")

    def phi(self, pts: np.ndarray) -> np.ndarray:
        self._check(pts, self.n)
        return phi_map(pts)

    def phi_inverse(self, pts: np.ndarray) -> np.ndarray:
        self._check(pts, self.n)
        return phi_inverse_map(pts)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        self._check(pts, self.n)
        return jacobian_phi_map(pts)

    def boundary_jacobian(self, Y: np.ndarray) -> np.ndarray:
        self._check(Y, self.n - 1)
        return jacobian_phi_boundary_map(Y)


# ---------------------------------------------------------------------------
# weighted pullback / pushforward isometries
# ---------------------------------------------------------------------------


def pullback_to_halfspace(
    ftilde: FieldFunction, params: KernelParams
) -> FieldFunction:
    """Weighted pullback: ball data to the half-space, sphere data to the plane.

    f = |(X, x_n + 1/2)|^{2-n-a} (ftilde o phi); the weight exponent is
    -(n - 2 + a), so for a = 2 - n this is a plain composition.  The map
    preserves the conformal L^p norms (interior exponent 2n/(n-2+a),
    boundary exponent 2(n-1)/(n-2+a)) whenever those are defined.
    """
    n, a = params.n, params.a
    w_exp = 2.0 - n - a

    if ftilde.domain == BALL:

        def interior(P):
            return shifted_norm_sq(P) ** (w_exp / 2.0) * ftilde(phi_map(P))

        return FieldFunction(
            HALFSPACE, n, interior, decay=params.eps,
            name=f"pullback[{ftilde.name}]",
        )
    if ftilde.domain == SPHERE:

        def boundary(Y):
            return boundary_shifted_norm_sq(Y) ** (w_exp / 2.0) * ftilde(
                phi_boundary_map(Y)
            )

        return FieldFunction(
            PLANE, n - 1, boundary, decay=params.eps,
            name=f"pullback[{ftilde.name}]",
        )
    raise ValueError("pullback expects data on the ball or the sphere")


def pushforward_to_ball(f: FieldFunction, params: KernelParams) -> FieldFunction:
    """Inverse of :func:`pullback_to_halfspace` (half-space/plane to ball/sphere)."""
    n, a = params.n, params.a
    w_exp = n + a - 2.0

    if f.domain == HALFSPACE:

        def interior(Q):
            shifted = Q.copy()
            shifted[:, -1] += 1.0
            # |(X, x_n + 1/2)| evaluated at phi^{-1}(q) equals 1/|q + e_n|
            return np.sum(shifted**2, axis=1) ** (-w_exp / 2.0) * f(
                phi_inverse_map(Q)
            )

        return FieldFunction(BALL, n, interior, name=f"pushforward[{f.name}]")
    if f.domain == PLANE:

        def boundary(Xi):
            shifted = Xi.copy()
            shifted[:, -1] += 1.0
            return np.sum(shifted**2, axis=1) ** (-w_exp / 2.0) * f(
                phi_inverse_boundary_map(Xi)
            )

        return FieldFunction(SPHERE, n, boundary, name=f"pushforward[{f.name}]")
    raise ValueError("pushforward expects data on the half-space or the plane")


def invert_conjugate(f: FieldFunction, params: KernelParams) -> FieldFunction:
    """Inversion conjugation on the boundary plane.

    Returns |Y|^{-(n-2+a)} f(Y / |Y|^2); preserves the boundary-exponent
    Lebesgue norm.  The origin (image of infinity) is left at 0; quadrature
    rules never place a node there.
    """
    if f.domain != PLANE:
        raise ValueError("invert_conjugate acts on plane data")
    eps = params.eps

    def conjugated(Y):
        r2 = np.sum(Y**2, axis=1)
        out = np.zeros(Y.shape[0])
        ok = r2 > 0
        inv = Y[ok] / r2[ok, None]
        out[ok] = r2[ok] ** (-eps / 2.0) * f(inv)
        return out

    return FieldFunction(
        PLANE, f.dim, conjugated, decay=eps,
        smooth="singular-origin", name=f"invconj[{f.name}]",
    )


# ---------------------------------------------------------------------------
# Moebius automorphisms of the ball
# ---------------------------------------------------------------------------


def _mobius_translate(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """The standard involutive automorphism T_b with T_b(0) = b, T_b(b) = 0."""
    bb = float(np.dot(b, b))
    if bb == 0.0:
        return x.copy()
    xb = x @ b
    xx = np.sum(x**2, axis=1)
    rho2 = 1.0 - 2.0 * xb + xx * bb
    diff2 = xx - 2.0 * xb + bb
    num = (1.0 - bb) * (b - x) + diff2[:, None] * b
    return num / rho2[:, None]


def _mobius_factor(x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Conformal stretch factor of T_b: (1 - |b|^2) / rho(x, b)^2."""
    bb = float(np.dot(b, b))
    if bb == 0.0:
        return np.ones(x.shape[0])
    rho2 = 1.0 - 2.0 * (x @ b) + np.sum(x**2, axis=1) * bb
    return (1.0 - bb) / rho2


@dataclass(frozen=True)
class MobiusTransform:
    """Ball automorphism in normal form: a rotation after a hyperbolic translation.

    apply(x) = R T_b(x).  The interior Jacobian is the conformal factor to
    the n-th power, the boundary (sphere-to-sphere) Jacobian the (n-1)-th
    power.  tau (the boundary restriction) is apply itself restricted to
    |x| = 1.
    """

    rotation: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if R.shape != (b.shape[0], b.shape[0]):
            raise ValueError("rotation and b have mismatched dimensions")
        if np.linalg.norm(R @ R.T - np.eye(len(b))) > 1e-10:
            raise ValueError("rotation matrix is not orthogonal")
        if np.linalg.norm(b) >= 1.0:
            raise ValueError("translation parameter needs |b| < 1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "b", b)

    @classmethod
    def identity(cls, n: int) -> "MobiusTransform":
        return cls(np.eye(n), np.zeros(n))

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _mobius_translate(x, self.b) @ self.rotation.T

    def conformal_factor(self, x: np.ndarray) -> np.ndarray:
        return _mobius_factor(np.asarray(x, dtype=float), self.b)

    def jacobian_interior(self, x: np.ndarray) -> np.ndarray:
        return self.conformal_factor(x) ** self.n

    def jacobian_boundary(self, xi: np.ndarray) -> np.ndarray:
        return self.conformal_factor(xi) ** (self.n - 1)

    def inverse(self) -> "MobiusTransform":
        # zero of the inverse map: apply(b) = 0, so inverse sends R b -> 0
        b_inv = self.rotation @ self.b
        return MobiusTransform(self._residual_rotation_of_inverse(b_inv), b_inv)

    def _residual_rotation_of_inverse(self, b_inv: np.ndarray) -> np.ndarray:
        basis = np.eye(self.n)
        # inverse o T_{b_inv} is linear orthogonal; its columns are the
        # images of the standard basis
        pts = _mobius_translate(basis, b_inv)
        cols = _mobius_translate(pts @ self.rotation, self.b)
        return cols.T

    def compose(self, other: "MobiusTransform") -> "MobiusTransform":
        """Normal form of self o other."""
        b_new = other.inverse().apply(self.b[None, :])[0]
        basis = np.eye(self.n)
        cols = self.apply(other.apply(_mobius_translate(basis, b_new)))
        return MobiusTransform(cols.T, b_new)


def mobius_apply(t: MobiusTransform, point: np.ndarray) -> np.ndarray:
    """Apply a ball automorphism to one point or a batch of points."""
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    out = t.apply(pts)
    return out[0] if np.asarray(point).ndim == 1 else out


def mobius_jacobians(t: MobiusTransform, point: np.ndarray):
    """(interior Jacobian, boundary Jacobian) at one point or a batch."""
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    ji = t.jacobian_interior(pts)
    jb = t.jacobian_boundary(pts)
    if np.asarray(point).ndim == 1:
        return float(ji[0]), float(jb[0])
    return ji, jb


def random_mobius(n: int, rng: np.random.Generator, bmax: float = 0.6) -> MobiusTransform:
    """A reproducible generic ball automorphism (random rotation and center)."""
    A = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    b = rng.standard_normal(n)
    b = b * (bmax * rng.uniform(0.2, 1.0) / np.linalg.norm(b))
    return MobiusTransform(Q, b)


# ---------------------------------------------------------------------------
# finite-difference oracles
# ---------------------------------------------------------------------------


def fd_jacobian_matrix(fun: Callable, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Centered finite-difference Jacobian matrix of a map R^n -> R^n."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    cols = []
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        fp = fun((x + e)[None, :])[0]
        fm = fun((x - e)[None, :])[0]
        cols.append((fp - fm) / (2.0 * h))
    return np.stack(cols, axis=1)


def fd_jacobian_det(fun: Callable, x: np.ndarray, h: float = 1e-5) -> float:
    """|det| of the finite-difference Jacobian matrix."""
    return abs(float(np.linalg.det(fd_jacobian_matrix(fun, x, h))))
