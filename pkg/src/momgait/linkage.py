"""Articulated-chain kinematics and the shape-dependent generalized inertia.

The systems are serial chains of elliptical links joined end to end.  The
middle link carries the (original) body frame; shapes are the joint-angle
vectors, periodic in 2*pi per joint.  The generalized inertia matrix blocks
M_gg (3x3), M_gr (3xN), M_rr (NxN) relate (body velocity, shape velocity)
to (body momentum, shape momentum).

Links immersed in a perfect fluid pick up added mass along their principal
axes; each link's added mass is treated independently of the others.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from momgait import se2
from momgait.se2 import GroupElement


@dataclass(frozen=True)
class LinkGeometry:
    """An elliptical link: semi-axes a = length/2 and b = a * aspect_ratio.

    fluid_density = 0 disables added mass.
    """

    length: float
    aspect_ratio: float = 0.1
    body_density: float = 1.0
    fluid_density: float = 0.0

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("link length must be positive")
        if not 0 < self.aspect_ratio <= 1:
            raise ValueError("aspect_ratio must be in (0, 1]")
        if self.body_density < 0 or self.fluid_density < 0:
            raise ValueError("densities must be nonnegative")


def link_inertia(geom: LinkGeometry) -> np.ndarray:
    """Local inertia matrix diag(m + m_ax, m + m_ay, J + J_a) of one link.

    m is the elliptical-plate mass, (m_ax, m_ay, J_a) the potential-flow
    added masses of an ellipse translating along its axes and rotating.
    """
    a = geom.length / 2.0
    b = a * geom.aspect_ratio
    m = geom.body_density * np.pi * a * b
    j = m * (a * a + b * b) / 4.0
    m_ax = geom.fluid_density * np.pi * b * b
    m_ay = geom.fluid_density * np.pi * a * a
    j_a = geom.fluid_density * (np.pi / 8.0) * (a * a - b * b) ** 2
    return np.diag([m + m_ax, m + m_ay, j + j_a])


@dataclass(frozen=True)
class SystemModel:
    """A serial chain with an odd number of links; the middle link is the base.

    Joint j sits between links j and j+1, ordered from the tail.  Joint
    angles are measured so that the straight chain is shape zero and the
    mirror image of the chain corresponds to reversing the joint order.
    """

    links: tuple[LinkGeometry, ...]
    name: str = "custom"

    def __post_init__(self):
        if len(self.links) < 3 or len(self.links) % 2 == 0:
            raise ValueError("chain needs an odd number of links, at least 3")

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_joints(self) -> int:
        return len(self.links) - 1

    @property
    def middle(self) -> int:
        return len(self.links) // 2

    @property
    def total_mass(self) -> float:
        return sum(
            g.body_density * np.pi * (g.length / 2.0) ** 2 * g.aspect_ratio
            for g in self.links
        )

    def local_inertias(self) -> np.ndarray:
        return np.stack([link_inertia(g) for g in self.links])


def swimmer() -> SystemModel:
    """Perfect-fluid swimmer: three unit-length links with added mass."""
    link = LinkGeometry(1.0, 0.1, 1.0, 1.0)
    return SystemModel((link, link, link), name="swimmer")


def snake() -> SystemModel:
    """Floating snake: length-2 center link, unit arms, no fluid."""
    arm = LinkGeometry(1.0, 0.1, 1.0, 0.0)
    center = LinkGeometry(2.0, 0.1, 1.0, 0.0)
    return SystemModel((arm, center, arm), name="snake")


# ---------------------------------------------------------------------------
# Chain kinematics.  Internally everything is batched: shapes have array
# shape (..., n_joints), link poses (..., n_links, 3), and the full link
# Jacobians (..., n_links, 3, 3 + n_joints) map (body velocity, shape
# velocity) to each link's body velocity.

def _pose(x, y, th, batch):
    out = np.zeros(batch + (3,))
    out[..., 0] = x
    out[..., 1] = y
    out[..., 2] = th
    return out


def chain_frames(model: SystemModel, alphas) -> tuple[np.ndarray, np.ndarray]:
    """Link poses relative to the middle link, plus their body Jacobians.

    Returns (frames, jac) with frames[..., i, :] the pose of link i and
    jac[..., i, :, :] of shape (3, 3 + n_joints).
    """
    alphas = np.asarray(alphas, dtype=float)
    batch = alphas.shape[:-1]
    n = model.n_links
    nj = model.n_joints
    mid = model.middle
    lengths = [g.length for g in model.links]

    frames = np.zeros(batch + (n, 3))
    jshape = np.zeros(batch + (n, 3, nj))

    # outward along the head side: step = T(l_prev/2) R(-alpha_j) T(l_i/2)
    f = np.zeros(batch + (3,))
    jprev = np.zeros(batch + (3, nj))
    for i in range(mid + 1, n):
        j = i - 1
        half_prev, half_i = lengths[i - 1] / 2.0, lengths[i] / 2.0
        step = se2.compose_arr(
            se2.compose_arr(
                _pose(half_prev, 0.0, 0.0, batch),
                _pose(0.0, 0.0, -alphas[..., j], batch),
            ),
            _pose(half_i, 0.0, 0.0, batch),
        )
        f = se2.compose_arr(f, step)
        ad_inv = se2.adjoint_arr(_inverse_arr(step))
        jcur = np.einsum("...ab,...bj->...aj", ad_inv, jprev)
        jcur[..., 0, j] = 0.0
        jcur[..., 1, j] = -half_i
        jcur[..., 2, j] = -1.0
        frames[..., i, :] = f
        jshape[..., i, :, :] = jcur
        jprev = jcur

    # outward along the tail side: step = T(-l_prev/2) R(alpha_j) T(-l_i/2)
    f = np.zeros(batch + (3,))
    jprev = np.zeros(batch + (3, nj))
    for i in range(mid - 1, -1, -1):
        j = i
        half_prev, half_i = lengths[i + 1] / 2.0, lengths[i] / 2.0
        step = se2.compose_arr(
            se2.compose_arr(
                _pose(-half_prev, 0.0, 0.0, batch),
                _pose(0.0, 0.0, alphas[..., j], batch),
            ),
            _pose(-half_i, 0.0, 0.0, batch),
        )
        f = se2.compose_arr(f, step)
        ad_inv = se2.adjoint_arr(_inverse_arr(step))
        jcur = np.einsum("...ab,...bj->...aj", ad_inv, jprev)
        jcur[..., 0, j] = 0.0
        jcur[..., 1, j] = -half_i
        jcur[..., 2, j] = 1.0
        frames[..., i, :] = f
        jshape[..., i, :, :] = jcur
        jprev = jcur

    jac = np.zeros(batch + (n, 3, 3 + nj))
    jac[..., :, :, :3] = se2.adjoint_arr(_inverse_arr(frames))
    jac[..., :, :, 3:] = jshape
    return frames, jac


def _inverse_arr(g):
    g = np.asarray(g)
    c, s = np.cos(g[..., 2]), np.sin(g[..., 2])
    out = np.empty(g.shape)
    out[..., 0] = -(c * g[..., 0] + s * g[..., 1])
    out[..., 1] = -(-s * g[..., 0] + c * g[..., 1])
    out[..., 2] = -g[..., 2]
    return out


def forward_kinematics(model: SystemModel, shape) -> list[GroupElement]:
    """Per-link poses relative to the middle-link body frame."""
    frames, _ = chain_frames(model, np.asarray(shape, dtype=float))
    return [GroupElement(*frames[i]) for i in range(model.n_links)]


@dataclass(frozen=True)
class InertiaMatrix:
    """Blocks of the generalized inertia at one shape."""

    M_gg: np.ndarray
    M_gr: np.ndarray
    M_rr: np.ndarray
    full: np.ndarray = field(repr=False, default=None)


def mass_matrix(model: SystemModel, alphas) -> np.ndarray:
    """Batched full (3 + n_joints)-square generalized inertia M(r)."""
    _, jac = chain_frames(model, alphas)
    mloc = model.local_inertias()  # (n_links, 3, 3)
    return np.einsum("...iab,iac,...icd->...bd", jac, mloc, jac)


def inertia_matrix(model: SystemModel, shape) -> InertiaMatrix:
    """Generalized inertia blocks at one shape; fails loudly if not PD."""
    m = mass_matrix(model, np.asarray(shape, dtype=float))
    if np.min(np.linalg.eigvalsh(m)) <= 0:
        raise ArithmeticError("generalized inertia is not positive definite")
    return InertiaMatrix(M_gg=m[:3, :3], M_gr=m[:3, 3:], M_rr=m[3:, 3:], full=m)
