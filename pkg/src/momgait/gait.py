"""Gait representation: truncated Fourier series per joint plus a period.

A gait is exactly periodic in shape, and its lift into shape-time space
advances by one period in the time coordinate per cycle.  Waypoints are
the uniform-in-time direct-transcription image of the gait; because the
samples sit at fixed phase fractions of the cycle, the sampled shapes do
not depend on the period, only the velocities and times do.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

MAX_ORDER = 4
T_MIN = 0.1


@dataclass(frozen=True)
class Gait:
    """Per-joint coefficients [a0, a1..a4, b1..b4] and period T.

    coeffs has shape (n_joints, 2 * MAX_ORDER + 1).
    """

    coeffs: np.ndarray
    period: float

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.shape[1] != 2 * MAX_ORDER + 1:
            raise ValueError(
                f"expected {2 * MAX_ORDER + 1} coefficients per joint, got {c.shape[1]}"
            )
        if self.period < T_MIN:
            raise ValueError(f"period must be at least {T_MIN}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "period", float(self.period))

    @property
    def n_joints(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_params(self) -> int:
        """Flat parameter count: all coefficients plus the period."""
        return self.coeffs.size + 1

    # -- flat parameter vector (coefficients row-major, then T) -------------

    def to_params(self) -> np.ndarray:
        return np.concatenate([self.coeffs.ravel(), [self.period]])

    @staticmethod
    def from_params(params, n_joints: int) -> "Gait":
        params = np.asarray(params, dtype=float)
        return Gait(params[:-1].reshape(n_joints, 2 * MAX_ORDER + 1), params[-1])

    # -- construction helpers ----------------------------------------------

    @staticmethod
    def point(shape, period: float = 1.0) -> "Gait":
        """Constant gait holding the given shape."""
        shape = np.asarray(shape, dtype=float)
        c = np.zeros((shape.size, 2 * MAX_ORDER + 1))
        c[:, 0] = shape
        return Gait(c, period)

    @staticmethod
    def circle(center, radius: float, period: float = 1.0, phase: float = 0.0) -> "Gait":
        """First-harmonic circular gait about the given center (2 joints)."""
        c = np.zeros((2, 2 * MAX_ORDER + 1))
        c[0, 0], c[1, 0] = center
        c[0, 1] = radius * np.cos(phase)
        c[0, MAX_ORDER + 1] = -radius * np.sin(phase)
        c[1, 1] = radius * np.sin(phase)
        c[1, MAX_ORDER + 1] = radius * np.cos(phase)
        return Gait(c, period)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, t):
        """Shape and shape velocity at time(s) t.

        Returns arrays of shape t.shape + (n_joints,).
        """
        t = np.asarray(t, dtype=float)
        omega = 2.0 * np.pi / self.period
        k = np.arange(1, MAX_ORDER + 1)
        ph = omega * np.multiply.outer(t, k)  # t.shape + (4,)
        cos, sin = np.cos(ph), np.sin(ph)
        a = self.coeffs[:, 1 : MAX_ORDER + 1]  # (nj, 4)
        b = self.coeffs[:, MAX_ORDER + 1 :]
        shape = self.coeffs[:, 0] + cos @ a.T + sin @ b.T
        vel = (-sin * (k * omega)) @ a.T + (cos * (k * omega)) @ b.T
        return shape, vel

    def amplitude(self) -> float:
        """RMS distance of the shape locus from its time-average center."""
        # exact from Parseval: mean square deviation = sum (a_k^2+b_k^2)/2
        dev = self.coeffs[:, 1:]
        return float(np.sqrt(0.5 * np.sum(dev**2)))

    def center(self) -> np.ndarray:
        return self.coeffs[:, 0].copy()

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {"joints": self.coeffs.tolist(), "period": self.period}, indent=2
        )

    @staticmethod
    def from_json(text: str) -> "Gait":
        obj = json.loads(text)
        return Gait(np.asarray(obj["joints"], dtype=float), obj["period"])


@dataclass(frozen=True)
class Waypoints:
    """Direct-transcription samples of a gait, uniform in time over [0, T].

    times has n + 1 entries with the endpoint duplicated in shape, so the
    first and last shape samples coincide.  tau is the lifted time
    coordinate (equal to the sample time).
    """

    times: np.ndarray
    shapes: np.ndarray
    velocities: np.ndarray

    @property
    def n(self) -> int:
        return len(self.times) - 1

    @property
    def tau(self) -> np.ndarray:
        return self.times


def to_waypoints(gait: Gait, n: int = 100) -> Waypoints:
    if n < 32:
        raise ValueError("need at least 32 transcription waypoints")
    t = np.linspace(0.0, gait.period, n + 1)
    shape, vel = gait.evaluate(t)
    return Waypoints(times=t, shapes=shape, velocities=vel)


def coefficient_jacobian(gait: Gait, n: int = 100):
    """Analytic derivatives of the waypoint samples w.r.t. (coeffs, T).

    Returns (d_shape, d_vel, d_tau):
      d_shape: (n+1, n_joints, n_params) derivative of sampled shapes,
      d_vel:   (n+1, n_joints, n_params) derivative of sampled velocities,
      d_tau:   (n+1, n_params) derivative of sample times.
    Samples sit at fixed phase fractions, so shape samples have zero
    derivative in T while velocities scale as 1/T and times as t/T.
    """
    npar = gait.n_params
    nj = gait.n_joints
    t = np.linspace(0.0, gait.period, n + 1)
    omega = 2.0 * np.pi / gait.period
    k = np.arange(1, MAX_ORDER + 1)
    ph = omega * np.multiply.outer(t, k)
    cos, sin = np.cos(ph), np.sin(ph)

    # basis for shape: [1, cos(k w t), sin(k w t)] per joint block
    basis = np.concatenate([np.ones((n + 1, 1)), cos, sin], axis=1)  # (n+1, 9)
    dbasis = np.concatenate(
        [np.zeros((n + 1, 1)), -sin * (k * omega), cos * (k * omega)], axis=1
    )

    d_shape = np.zeros((n + 1, nj, npar))
    d_vel = np.zeros((n + 1, nj, npar))
    ncoef = 2 * MAX_ORDER + 1
    for j in range(nj):
        cols = slice(j * ncoef, (j + 1) * ncoef)
        d_shape[:, j, cols] = basis
        d_vel[:, j, cols] = dbasis
    _, vel = gait.evaluate(t)
    d_vel[:, :, -1] = -vel / gait.period

    d_tau = np.zeros((n + 1, npar))
    d_tau[:, -1] = t / gait.period
    return d_shape, d_vel, d_tau
