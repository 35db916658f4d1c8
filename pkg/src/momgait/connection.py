"""Local connection, momentum distribution, and grid-sampled shape-space fields.

The reconstruction equation at momentum p reads

    xi = -A(r) rdot + Mgg_inv(r) Ad*_g p,

with A = M_gg^-1 M_gr the local connection and Mgg_inv Ad*_g the momentum
distribution.  A ShapeGrid samples everything over the periodic domain
[0, 2pi)^2, optionally in minimum-perturbation coordinates: the body frame
is moved to a generalized center of mass and rotated by the potential that
best cancels the rotational row of the connection (a periodic least-squares
/ Poisson problem solved spectrally).

Interpolation is periodic bicubic B-spline (C^2, 4th-order accurate); the
frame field beta is differentiated through its own spline so that grid
consumers and the exact dynamics backend see one consistent frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from momgait import linkage, se2
from momgait.linkage import SystemModel

FIBER_INDEX = {"x": 0, "y": 1, "theta": 2}


@dataclass(frozen=True)
class ConnectionSample:
    """Local connection A (3x2) and cached M_gg^-1 at one shape."""

    A: np.ndarray
    Mgg_inv: np.ndarray


def local_connection(model: SystemModel, shape) -> ConnectionSample:
    """Exact connection sample in the original (middle-link) frame."""
    blocks = linkage.inertia_matrix(model, shape)
    mgg_inv = np.linalg.inv(blocks.M_gg)
    return ConnectionSample(A=mgg_inv @ blocks.M_gr, Mgg_inv=mgg_inv)


def momentum_distribution(sample: ConnectionSample, g: se2.GroupElement) -> np.ndarray:
    """Matrix mapping constant spatial momentum to drift body velocity."""
    return sample.Mgg_inv @ se2.adjoint(g).T


def transform_sample(sample: ConnectionSample, beta, grad_beta) -> ConnectionSample:
    """Re-express a connection sample in the frame field beta.

    beta is the pose (bx, by, btheta) of the new frame in the old one and
    grad_beta its (2, 3) shape-derivative; the momentum-distribution factor
    is conjugated to match the new frame.
    """
    beta = np.asarray(beta, dtype=float)
    ad_inv = se2.adjoint_arr(linkage._inverse_arr(beta))
    b_local = _trivialize(beta, np.asarray(grad_beta, dtype=float))
    a_new = ad_inv @ sample.A - b_local.T
    mgg_inv_new = ad_inv @ sample.Mgg_inv @ ad_inv.T
    return ConnectionSample(A=a_new, Mgg_inv=mgg_inv_new)


def _trivialize(beta, grad_beta):
    """Left-trivialize frame-field derivatives: rows beta^-1 d(beta)/d(alpha_j)."""
    c = np.expand_dims(np.cos(beta[..., 2]), -1)
    s = np.expand_dims(np.sin(beta[..., 2]), -1)
    out = np.empty(grad_beta.shape)
    out[..., 0] = c * grad_beta[..., 0] + s * grad_beta[..., 1]
    out[..., 1] = -s * grad_beta[..., 0] + c * grad_beta[..., 1]
    out[..., 2] = grad_beta[..., 2]
    return out


# ---------------------------------------------------------------------------
# periodic spline machinery

class PeriodicSpline2D:
    """Periodic cubic B-spline interpolant on a uniform [0, 2pi)^2 grid.

    data has shape (n, n, k); evaluation is vectorized over query points and
    can return analytic first partial derivatives.
    """

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=float)
        self.n = data.shape[0]
        self.h = 2.0 * np.pi / self.n
        # prefilter: invert the B-spline collocation (circulant) per axis
        freq = np.fft.fftfreq(self.n) * 2.0 * np.pi
        denom = (2.0 + np.cos(freq)) / 3.0
        fhat = np.fft.fft(np.fft.fft(data, axis=0), axis=1)
        fhat /= denom[:, None, None]
        fhat /= denom[None, :, None]
        self.coef = np.real(np.fft.ifft(np.fft.ifft(fhat, axis=0), axis=1))

    @staticmethod
    def _weights(w):
        b = np.empty(w.shape + (4,))
        omw = 1.0 - w
        b[..., 0] = omw**3 / 6.0
        b[..., 1] = (4.0 - 6.0 * w**2 + 3.0 * w**3) / 6.0
        b[..., 2] = (1.0 + 3.0 * w + 3.0 * w**2 - 3.0 * w**3) / 6.0
        b[..., 3] = w**3 / 6.0
        db = np.empty(w.shape + (4,))
        db[..., 0] = -0.5 * omw**2
        db[..., 1] = 1.5 * w**2 - 2.0 * w
        db[..., 2] = 0.5 + w - 1.5 * w**2
        db[..., 3] = 0.5 * w**2
        return b, db

    def __call__(self, pts, derivs: bool = False):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        u = pts / self.h
        i0 = np.floor(u).astype(int)
        w = u - i0
        bu, dbu = self._weights(w[:, 0])
        bv, dbv = self._weights(w[:, 1])
        offs = np.arange(-1, 3)
        ii = (i0[:, 0, None] + offs) % self.n  # (m, 4)
        jj = (i0[:, 1, None] + offs) % self.n
        patch = self.coef[ii[:, :, None], jj[:, None, :], :]  # (m, 4, 4, k)
        val = np.einsum("ma,mb,mabk->mk", bu, bv, patch)
        if not derivs:
            return val
        d1 = np.einsum("ma,mb,mabk->mk", dbu, bv, patch) / self.h
        d2 = np.einsum("ma,mb,mabk->mk", bu, dbv, patch) / self.h
        return val, d1, d2


def periodic_derivative(field: np.ndarray, axis: int, h: float) -> np.ndarray:
    """4th-order centered periodic finite difference along a grid axis."""
    f1 = np.roll(field, -1, axis=axis) - np.roll(field, 1, axis=axis)
    f2 = np.roll(field, -2, axis=axis) - np.roll(field, 2, axis=axis)
    return (8.0 * f1 - f2) / (12.0 * h)


# ---------------------------------------------------------------------------
# coordinate optimization

def optimize_coordinates(model: SystemModel, alphas, a_raw, frames) -> np.ndarray:
    """Minimum-perturbation frame field beta over the grid.

    The rotation is the periodic least-squares potential of the theta row of
    the raw connection (discrete Poisson problem, 4th-order stencils, solved
    by FFT with the constant mode pinned); the translation recenters the
    frame at the added-mass-weighted center of mass.
    """
    weights = np.array([np.trace(m[:2, :2]) / 2.0 for m in model.local_inertias()])
    com = np.einsum("i,xyic->xyc", weights, frames[..., :2]) / np.sum(weights)
    theta = _poisson_potential(a_raw[..., 2, 0], a_raw[..., 2, 1])
    return np.concatenate([com, theta[..., None]], axis=-1)


def _poisson_potential(t1, t2):
    """Solve min_theta sum |D theta - (t1, t2)|^2 on the periodic grid."""
    n = t1.shape[0]
    h = 2.0 * np.pi / n
    k = np.fft.fftfreq(n) * 2.0 * np.pi
    sym = 1j * (8.0 * np.sin(k) - np.sin(2.0 * k)) / (6.0 * h)  # stencil symbol
    s1 = sym[:, None]
    s2 = sym[None, :]
    rhs = np.conj(s1) * np.fft.fft2(t1) + np.conj(s2) * np.fft.fft2(t2)
    denom = np.abs(s1) ** 2 + np.abs(s2) ** 2
    # the stencil symbol vanishes at the zero and Nyquist modes; pin them
    null = denom < 1e-12 * denom.max()
    denom[null] = 1.0
    that = rhs / denom
    that[null] = 0.0
    return np.real(np.fft.ifft2(that))


def transformed_inertia(m_raw, beta, grad_beta):
    """Conjugate generalized inertia into the frame field beta (batched).

    M_new = W^T M W with W = [[Ad_beta, -Ad_beta B^T], [0, I]] and B the
    left-trivialized frame slope.  Returns (M_new, A_new, Mgg_inv_new).
    """
    ad_beta = se2.adjoint_arr(beta)
    b_local = _trivialize(beta, grad_beta)  # (..., 2, 3)
    batch = np.asarray(beta).shape[:-1]
    w = np.zeros(batch + (5, 5))
    w[..., :3, :3] = ad_beta
    w[..., :3, 3:] = -np.einsum("...ab,...jb->...aj", ad_beta, b_local)
    w[..., 3, 3] = 1.0
    w[..., 4, 4] = 1.0
    m_new = np.einsum("...ba,...bc,...cd->...ad", w, m_raw, w)
    mgg = m_new[..., :3, :3]
    a_new = np.linalg.solve(mgg, m_new[..., :3, 3:])
    return m_new, a_new, np.linalg.inv(mgg)


# ---------------------------------------------------------------------------
# the grid

_COMP = {}
_ofs = 0
for _name, _size in [
    ("A", 6),
    ("Mgg_inv", 9),
    ("M", 25),
    ("beta", 3),
    ("D12", 3),
    ("dMgg_inv_1", 9),
    ("dMgg_inv_2", 9),
    ("locked", 9),
]:
    _COMP[_name] = slice(_ofs, _ofs + _size)
    _ofs += _size
_NCOMP = _ofs

_SHAPES = {
    "A": (3, 2),
    "Mgg_inv": (3, 3),
    "M": (5, 5),
    "beta": (3,),
    "D12": (3,),
    "dMgg_inv_1": (3, 3),
    "dMgg_inv_2": (3, 3),
    "locked": (3, 3),
}


class ShapeGrid:
    """Grid-sampled connection data over the periodic shape torus.

    All sampled quantities live in the working body frame: the
    minimum-perturbation frame when optimize_coords is on (the default),
    otherwise the original middle-link frame.  Immutable after
    construction; evaluation is pure and safe to share across threads.
    """

    def __init__(self, model: SystemModel, n: int = 64, optimize_coords: bool = True):
        if model.n_joints != 2:
            raise ValueError("shape grids require a two-joint system")
        self.model = model
        self.n = n
        self.h = 2.0 * np.pi / n
        self.optimize_coords = optimize_coords
        self.axis = np.arange(n) * self.h

        a1, a2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        alphas = np.stack([a1, a2], axis=-1)
        frames, _ = linkage.chain_frames(model, alphas)
        m_raw = linkage.mass_matrix(model, alphas)  # (n, n, 5, 5)
        a_raw = np.linalg.solve(m_raw[..., :3, :3], m_raw[..., :3, 3:])

        if optimize_coords:
            beta = optimize_coordinates(model, alphas, a_raw, frames)
        else:
            beta = np.zeros((n, n, 3))
        self._beta_spline = PeriodicSpline2D(beta)
        _, db1, db2 = self._beta_spline(alphas.reshape(-1, 2), derivs=True)
        grad_beta = np.stack([db1, db2], axis=1).reshape(n, n, 2, 3)

        m_new, a_new, mgg_inv = transformed_inertia(m_raw, beta, grad_beta)
        mgg = m_new[..., :3, :3]

        # kinematic curvature component: -dA + [A1, A2] on the grid
        a1col = a_new[..., :, 0]
        a2col = a_new[..., :, 1]
        d_a2_d1 = periodic_derivative(a2col, 0, self.h)
        d_a1_d2 = periodic_derivative(a1col, 1, self.h)
        d12 = -(d_a2_d1 - d_a1_d2) + se2._lie_bracket_arr(a1col, a2col)

        data = np.zeros((n, n, _NCOMP))
        data[..., _COMP["A"]] = a_new.reshape(n, n, 6)
        data[..., _COMP["Mgg_inv"]] = mgg_inv.reshape(n, n, 9)
        data[..., _COMP["M"]] = m_new.reshape(n, n, 25)
        data[..., _COMP["beta"]] = beta
        data[..., _COMP["D12"]] = d12
        data[..., _COMP["dMgg_inv_1"]] = periodic_derivative(mgg_inv, 0, self.h).reshape(n, n, 9)
        data[..., _COMP["dMgg_inv_2"]] = periodic_derivative(mgg_inv, 1, self.h).reshape(n, n, 9)
        data[..., _COMP["locked"]] = mgg.reshape(n, n, 9)
        self._data = data
        self._spline = PeriodicSpline2D(data)
        self._raw_theta_row = a_raw[..., 2, :]
        self._new_theta_row = a_new[..., 2, :]

    # -- queries ------------------------------------------------------------

    def node_field(self, name: str) -> np.ndarray:
        """Raw node values of one component, shaped (n, n, *component shape)."""
        return self._data[..., _COMP[name]].reshape((self.n, self.n) + _SHAPES[name])

    def query(self, pts, names=("A", "Mgg_inv")) -> dict:
        """Spline-interpolated components at points (m, 2)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        val = self._spline(pts)
        m = pts.shape[0]
        return {nm: val[:, _COMP[nm]].reshape((m,) + _SHAPES[nm]) for nm in names}

    def beta_at(self, pts):
        """Frame field value and shape-derivatives (from the beta spline)."""
        val, d1, d2 = self._beta_spline(pts, derivs=True)
        return val, d1, d2

    def interpolate(self, shape) -> ConnectionSample:
        out = self.query(np.asarray(shape, dtype=float)[None, :])
        return ConnectionSample(A=out["A"][0], Mgg_inv=out["Mgg_inv"][0])


def build_grid(model: SystemModel, n: int = 64, optimize_coords: bool = True) -> ShapeGrid:
    return ShapeGrid(model, n=n, optimize_coords=optimize_coords)


def minimum_inertia_shape(grid: ShapeGrid, direction: str) -> np.ndarray:
    """Shape minimizing the locked inertia entry for one fiber direction.

    Coarse periodic-grid argmin refined by local descent on the
    interpolated field.
    """
    from scipy.optimize import minimize

    d = FIBER_INDEX[direction]
    locked = grid.node_field("locked")[..., d, d]
    i, j = np.unravel_index(np.argmin(locked), locked.shape)
    x0 = np.array([grid.axis[i], grid.axis[j]])

    def f(r):
        return grid.query(r[None, :], names=("locked",))["locked"][0, d, d]

    res = minimize(f, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    return np.mod(res.x, 2.0 * np.pi)
