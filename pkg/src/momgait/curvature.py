"""Height functions over lifted shape-time space: the total-Lie-bracket
curvature of the connection, augmented with momentum drift terms.

Lifting the base space to (alpha1, alpha2, tau) with unit-rate tau turns
the drift column A3 = -(momentum distribution) p into a third connection
column.  The curvature then has three 2-form components:

  D12  = -dA_{1,2} + [A1, A2]                    (kinematic coupling)
  Di,t = -dA3/dalpha_i + [Ai, A3] + (dA3/dg) Ai  (drift couplings, i = 1, 2)

D12 depends only on shape and is precomputed on the grid; the drift
components are linear in the spatial momentum and depend on the pose
through the dual adjoint, so they are evaluated in closed form per query.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from momgait import se2
from momgait.connection import ShapeGrid


@dataclass(frozen=True)
class LiftedConnectionSample:
    """Columns of the lifted connection at one (shape, pose, momentum)."""

    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray

    def reconstruct(self, shape_velocity) -> np.ndarray:
        """Body velocity xi = -(A1, A2, A3) . (alpha1dot, alpha2dot, 1)."""
        rd = np.asarray(shape_velocity, dtype=float)
        return -(self.A1 * rd[0] + self.A2 * rd[1] + self.A3)


@dataclass(frozen=True)
class CCFSample:
    """The three curvature 2-form components at one query, each se(2)-valued."""

    D12: np.ndarray
    D1t: np.ndarray
    D2t: np.ndarray


def _drift_terms(grid: ShapeGrid, pts, poses, p):
    """Batched building blocks: A columns, A3, its shape and pose derivatives."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    poses = np.atleast_2d(np.asarray(poses, dtype=float))
    p = np.asarray(p, dtype=float)
    q = se2.dual_adjoint_apply_arr(poses, p)  # body momentum Ad*_g p
    out = grid.query(pts, names=("A", "Mgg_inv", "dMgg_inv_1", "dMgg_inv_2", "D12"))
    a3 = -np.einsum("nij,nj->ni", out["Mgg_inv"], q)
    da3_1 = -np.einsum("nij,nj->ni", out["dMgg_inv_1"], q)
    da3_2 = -np.einsum("nij,nj->ni", out["dMgg_inv_2"], q)
    return out, q, a3, da3_1, da3_2


def _pose_derivative_term(mgg_inv, q, eta):
    """(dA3/dg) applied to a body direction eta, in closed form.

    Moving the pose with body velocity eta changes the body momentum at rate
    ad_eta^T q, so dA3/dg . eta = -Mgg_inv ad_eta^T q.
    """
    ad_t_q = np.empty(eta.shape)
    ad_t_q[..., 0] = eta[..., 2] * q[..., 1]
    ad_t_q[..., 1] = -eta[..., 2] * q[..., 0]
    ad_t_q[..., 2] = eta[..., 1] * q[..., 0] - eta[..., 0] * q[..., 1]
    return -np.einsum("nij,nj->ni", mgg_inv, ad_t_q)


def lifted_connection(grid: ShapeGrid, shape, g: se2.GroupElement, p) -> LiftedConnectionSample:
    """Lifted connection columns at one query point."""
    out = grid.query(np.asarray(shape, dtype=float)[None, :], names=("A", "Mgg_inv"))
    q = se2.dual_adjoint(g, se2.Covector.from_array(np.asarray(p, dtype=float)))
    a3 = -out["Mgg_inv"][0] @ q.as_array()
    return LiftedConnectionSample(A1=out["A"][0][:, 0], A2=out["A"][0][:, 1], A3=a3)


def ccf_batch(grid: ShapeGrid, pts, poses, p):
    """Curvature components at many (shape, pose) queries; returns a dict
    of (m, 3) arrays D12, D1t, D2t."""
    out, q, a3, da3_1, da3_2 = _drift_terms(grid, pts, poses, p)
    a1 = out["A"][:, :, 0]
    a2 = out["A"][:, :, 1]
    d1t = -da3_1 + se2._lie_bracket_arr(a1, a3) + _pose_derivative_term(
        out["Mgg_inv"], q, a1
    )
    d2t = -da3_2 + se2._lie_bracket_arr(a2, a3) + _pose_derivative_term(
        out["Mgg_inv"], q, a2
    )
    return {"D12": out["D12"], "D1t": d1t, "D2t": d2t}


def ccf(grid: ShapeGrid, shape, g: se2.GroupElement, p) -> CCFSample:
    """Curvature sample at one (shape, pose, momentum) query."""
    res = ccf_batch(
        grid,
        np.asarray(shape, dtype=float)[None, :],
        g.as_array()[None, :],
        p,
    )
    return CCFSample(D12=res["D12"][0], D1t=res["D1t"][0], D2t=res["D2t"][0])


def ccf_grid_snapshot(grid: ShapeGrid, p) -> dict:
    """Full-grid curvature at the identity pose, for visualization.

    Returns (n, n, 3) arrays for each component.
    """
    n = grid.n
    a1, a2 = np.meshgrid(grid.axis, grid.axis, indexing="ij")
    pts = np.stack([a1, a2], axis=-1).reshape(-1, 2)
    poses = np.zeros((pts.shape[0], 3))
    res = ccf_batch(grid, pts, poses, p)
    return {k: v.reshape(n, n, 3) for k, v in res.items()}


def two_form_apply(d12, d1t, d2t, u, v):
    """Evaluate the vector-valued 2-form on lifted tangent pairs (u, v).

    u, v are (..., 3) lifted-base vectors (dalpha1, dalpha2, dtau); the
    result is the se(2)-valued contraction, shape (..., 3).
    """
    c12 = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    c1t = u[..., 0] * v[..., 2] - u[..., 2] * v[..., 0]
    c2t = u[..., 1] * v[..., 2] - u[..., 2] * v[..., 1]
    return (
        d12 * c12[..., None] + d1t * c1t[..., None] + d2t * c2t[..., None]
    )
