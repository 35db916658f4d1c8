"""Exact SE(2) group and se(2) algebra operations.

Conventions:
  * A group element g = (x, y, theta) acts on the plane as the homogeneous
    transform [[R(theta), (x, y)], [0, 1]].
  * An algebra vector xi = (vx, vy, vtheta) is a body velocity: gdot = g * hat(xi).
  * Covectors pair with algebra vectors through the ordinary dot product.
  * The dual adjoint converts momentum about the world origin ("spatial")
    into momentum in body-aligned coordinates: <Ad*_g p, xi> = <p, Ad_g xi>.

Stored angles are wrapped to (-pi, pi]; anything that integrates or
differentiates should work on raw arrays and wrap only at the boundary.
All operations here are pure functions on immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def wrap_angle(theta):
    """Wrap an angle (or array of angles) to the interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - theta, 2.0 * np.pi)


@dataclass(frozen=True)
class GroupElement:
    """A planar pose (x, y, theta) with theta stored in (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(wrap_angle(self.theta)))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))

    @staticmethod
    def identity() -> "GroupElement":
        return GroupElement(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])

    def as_matrix(self) -> np.ndarray:
        """Homogeneous 3x3 transform."""
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[c, -s, self.x], [s, c, self.y], [0.0, 0.0, 1.0]])

    @staticmethod
    def from_matrix(m: np.ndarray) -> "GroupElement":
        return GroupElement(m[0, 2], m[1, 2], np.arctan2(m[1, 0], m[0, 0]))


@dataclass(frozen=True)
class AlgebraVector:
    """A body velocity (vx, vy, vtheta) in se(2)."""

    vx: float
    vy: float
    vtheta: float

    @staticmethod
    def zero() -> "AlgebraVector":
        return AlgebraVector(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vtheta])

    @staticmethod
    def from_array(v) -> "AlgebraVector":
        return AlgebraVector(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True)
class Covector:
    """A momentum covector (px, py, ptheta)."""

    px: float
    py: float
    ptheta: float

    @staticmethod
    def zero() -> "Covector":
        return Covector(0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.px, self.py, self.ptheta])

    @staticmethod
    def from_array(p) -> "Covector":
        return Covector(float(p[0]), float(p[1]), float(p[2]))

    def pair(self, xi: AlgebraVector) -> float:
        """Natural pairing <p, xi>."""
        return self.px * xi.vx + self.py * xi.vy + self.ptheta * xi.vtheta


class LogBranchError(ValueError):
    """Raised when log() is evaluated at the theta = pi branch cut."""


def compose(g1: GroupElement, g2: GroupElement) -> GroupElement:
    """Group product g1 * g2 (apply g2 in the frame of g1)."""
    c, s = np.cos(g1.theta), np.sin(g1.theta)
    return GroupElement(
        g1.x + c * g2.x - s * g2.y,
        g1.y + s * g2.x + c * g2.y,
        g1.theta + g2.theta,
    )


def inverse(g: GroupElement) -> GroupElement:
    c, s = np.cos(g.theta), np.sin(g.theta)
    return GroupElement(-(c * g.x + s * g.y), -(-s * g.x + c * g.y), -g.theta)


def adjoint(g: GroupElement) -> np.ndarray:
    """Adjoint matrix Ad_g, mapping body algebra vectors through g.

    Ad_g xi = (d/de) g exp(e xi) g^-1 at e = 0.
    """
    c, s = np.cos(g.theta), np.sin(g.theta)
    return np.array([[c, -s, g.y], [s, c, -g.x], [0.0, 0.0, 1.0]])


def adjoint_inverse(g: GroupElement) -> np.ndarray:
    return adjoint(inverse(g))


def dual_adjoint(g: GroupElement, p_spatial: Covector) -> Covector:
    """Convert spatial momentum to body momentum: Ad*_g p = Ad_g^T p."""
    return Covector.from_array(adjoint(g).T @ p_spatial.as_array())


def lie_bracket(xi: AlgebraVector, eta: AlgebraVector) -> AlgebraVector:
    """se(2) Lie bracket [xi, eta], matching the commutator-of-flows limit."""
    v = _lie_bracket_arr(xi.as_array(), eta.as_array())
    return AlgebraVector.from_array(v)


def _lie_bracket_arr(a, b):
    """Bracket on raw (..., 3) arrays; broadcastable."""
    a = np.asarray(a)
    b = np.asarray(b)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 2] * -b[..., 1] + b[..., 2] * a[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - b[..., 2] * a[..., 0]
    out[..., 2] = 0.0
    return out


def _ad_arr(xi):
    """Matrix of ad_xi (the algebra adjoint), so ad_xi @ eta = [xi, eta]."""
    vx, vy, w = xi[0], xi[1], xi[2]
    return np.array([[0.0, -w, vy], [w, 0.0, -vx], [0.0, 0.0, 0.0]])


_TAYLOR_CUTOFF = 1e-6


def exp(xi: AlgebraVector, dt: float = 1.0) -> GroupElement:
    """Group exponential: solution at time dt of gdot = g xi from identity."""
    x, y, th = _exp_arr(xi.as_array() * dt)
    return GroupElement(x, y, th)


def _exp_arr(v):
    """exp on a raw length-3 (or (..., 3)) array; returns unwrapped theta."""
    v = np.asarray(v, dtype=float)
    vx, vy, th = v[..., 0], v[..., 1], v[..., 2]
    small = np.abs(th) < _TAYLOR_CUTOFF
    th_safe = np.where(small, 1.0, th)
    # V(theta) entries: a = sin/theta, b = (1-cos)/theta, with series fallback
    a = np.where(small, 1.0 - th**2 / 6.0, np.sin(th_safe) / th_safe)
    b = np.where(small, th / 2.0 - th**3 / 24.0, (1.0 - np.cos(th_safe)) / th_safe)
    x = a * vx - b * vy
    y = b * vx + a * vy
    return np.stack([x, y, th], axis=-1) if v.ndim > 1 else np.array([x, y, th])


def log(g: GroupElement) -> AlgebraVector:
    """Group logarithm: inverse of exp(., 1). Errors at the theta = pi cut."""
    th = g.theta
    if abs(abs(th) - np.pi) < 1e-12:
        raise LogBranchError("log() is ambiguous at theta = +/-pi")
    if abs(th) < _TAYLOR_CUTOFF:
        a = 1.0 - th**2 / 6.0
        b = th / 2.0 - th**3 / 24.0
    else:
        a = np.sin(th) / th
        b = (1.0 - np.cos(th)) / th
    det = a * a + b * b
    vx = (a * g.x + b * g.y) / det
    vy = (-b * g.x + a * g.y) / det
    return AlgebraVector(vx, vy, th)


# ---------------------------------------------------------------------------
# Batched helpers on raw (..., 3) pose arrays (theta left unwrapped).  These
# are the hot-path primitives used by the integrator; the wrapped classes
# above are the API boundary.

def compose_arr(g1, g2):
    g1 = np.asarray(g1)
    g2 = np.asarray(g2)
    c, s = np.cos(g1[..., 2]), np.sin(g1[..., 2])
    out = np.empty(np.broadcast_shapes(g1.shape, g2.shape))
    out[..., 0] = g1[..., 0] + c * g2[..., 0] - s * g2[..., 1]
    out[..., 1] = g1[..., 1] + s * g2[..., 0] + c * g2[..., 1]
    out[..., 2] = g1[..., 2] + g2[..., 2]
    return out


def adjoint_arr(g):
    """Batched Ad_g: (..., 3) poses -> (..., 3, 3) matrices."""
    g = np.asarray(g)
    c, s = np.cos(g[..., 2]), np.sin(g[..., 2])
    out = np.zeros(g.shape[:-1] + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 0, 2] = g[..., 1]
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 1, 2] = -g[..., 0]
    out[..., 2, 2] = 1.0
    return out


def dual_adjoint_apply_arr(g, p):
    """Batched Ad_g^T p for (..., 3) poses and a length-3 covector p."""
    g = np.asarray(g)
    c, s = np.cos(g[..., 2]), np.sin(g[..., 2])
    out = np.empty(g.shape)
    out[..., 0] = c * p[0] + s * p[1]
    out[..., 1] = -s * p[0] + c * p[1]
    out[..., 2] = g[..., 1] * p[0] - g[..., 0] * p[1] + p[2]
    return out
