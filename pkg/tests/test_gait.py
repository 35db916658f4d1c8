import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from momgait.gait import Gait, MAX_ORDER, T_MIN, coefficient_jacobian, to_waypoints

coeff_arrays = st.lists(
    st.lists(st.floats(-2.0, 2.0), min_size=9, max_size=9), min_size=1, max_size=3
).map(np.array)


def random_gait(seed=0, nj=2, period=2.0):
    rng = np.random.default_rng(seed)
    return Gait(rng.normal(scale=0.4, size=(nj, 2 * MAX_ORDER + 1)), period)


class TestConstruction:
    def test_coefficient_count_enforced(self):
        with pytest.raises(ValueError):
            Gait(np.zeros((2, 7)), 1.0)

    def test_minimum_period_enforced(self):
        with pytest.raises(ValueError):
            Gait(np.zeros((2, 9)), 0.05)

    def test_coeffs_are_immutable(self):
        g = Gait(np.zeros((2, 9)), 1.0)
        with pytest.raises(ValueError):
            g.coeffs[0, 0] = 1.0

    def test_point_gait(self):
        g = Gait.point([0.5, -0.3], period=2.0)
        shape, vel = g.evaluate(np.linspace(0.0, 2.0, 7))
        assert np.allclose(shape, [0.5, -0.3])
        assert np.allclose(vel, 0.0)

    def test_circle_gait_geometry(self):
        g = Gait.circle([1.0, 2.0], 0.3, period=1.0, phase=0.4)
        t = np.linspace(0.0, 1.0, 50)
        shape, vel = g.evaluate(t)
        radii = np.linalg.norm(shape - [1.0, 2.0], axis=1)
        assert np.allclose(radii, 0.3, atol=1e-12)
        assert shape[0, 0] == pytest.approx(1.0 + 0.3 * np.cos(0.4))
        assert shape[0, 1] == pytest.approx(2.0 + 0.3 * np.sin(0.4))
        speeds = np.linalg.norm(vel, axis=1)
        assert np.allclose(speeds, 2.0 * np.pi * 0.3, atol=1e-12)


class TestEvaluate:
    def test_periodicity(self):
        g = random_gait(3)
        s0, v0 = g.evaluate(0.37)
        s1, v1 = g.evaluate(0.37 + 3.0 * g.period)
        assert np.allclose(s0, s1, atol=1e-10)
        assert np.allclose(v0, v1, atol=1e-10)

    def test_velocity_is_time_derivative(self):
        g = random_gait(4)
        t, h = 0.81, 1e-6
        sp, _ = g.evaluate(t + h)
        sm, _ = g.evaluate(t - h)
        _, v = g.evaluate(t)
        assert np.allclose((sp - sm) / (2.0 * h), v, atol=1e-6)

    def test_amplitude_matches_sampled_rms(self):
        g = random_gait(5)
        t = np.arange(4096) / 4096 * g.period
        shape, _ = g.evaluate(t)
        rms = np.sqrt(np.mean(np.sum((shape - g.center()) ** 2, axis=1)))
        assert g.amplitude() == pytest.approx(rms, rel=1e-10)


class TestParams:
    @given(coeff_arrays, st.floats(0.1, 50.0))
    @settings(max_examples=30)
    def test_roundtrip(self, coeffs, period):
        g = Gait(coeffs, period)
        back = Gait.from_params(g.to_params(), g.n_joints)
        assert np.array_equal(back.coeffs, g.coeffs)
        assert back.period == g.period

    def test_param_layout(self):
        g = random_gait(6)
        p = g.to_params()
        assert p.size == g.n_params == 19
        assert p[-1] == g.period
        assert np.array_equal(p[:18].reshape(2, 9), g.coeffs)


class TestJson:
    def test_roundtrip(self):
        g = random_gait(7)
        back = Gait.from_json(g.to_json())
        assert np.array_equal(back.coeffs, g.coeffs)
        assert back.period == g.period

    def test_schema(self):
        obj = json.loads(random_gait(8).to_json())
        assert set(obj) == {"joints", "period"}
        assert len(obj["joints"]) == 2
        assert all(len(row) == 9 for row in obj["joints"])


class TestWaypoints:
    def test_minimum_count_enforced(self):
        with pytest.raises(ValueError):
            to_waypoints(random_gait(1), n=16)

    def test_endpoint_closure(self):
        w = to_waypoints(random_gait(2), n=64)
        assert w.n == 64
        assert np.allclose(w.shapes[0], w.shapes[-1], atol=1e-10)
        assert np.allclose(w.velocities[0], w.velocities[-1], atol=1e-10)
        assert w.times[-1] == pytest.approx(random_gait(2).period)

    def test_tau_equals_times(self):
        w = to_waypoints(random_gait(2), n=40)
        assert np.array_equal(w.tau, w.times)


class TestCoefficientJacobian:
    def test_against_finite_differences(self):
        g = random_gait(9)
        n = 48
        d_shape, d_vel, d_tau = coefficient_jacobian(g, n)
        params = g.to_params()
        h = 1e-6
        for idx in [0, 1, 5, 9, 17, 18]:
            q = params.copy()
            q[idx] += h
            gp = Gait.from_params(q, 2)
            q[idx] -= 2.0 * h
            gm = Gait.from_params(q, 2)
            tp = np.linspace(0.0, gp.period, n + 1)
            tm = np.linspace(0.0, gm.period, n + 1)
            sp, vp = gp.evaluate(tp)
            sm, vm = gm.evaluate(tm)
            assert np.allclose((sp - sm) / (2.0 * h), d_shape[:, :, idx], atol=1e-5)
            assert np.allclose((vp - vm) / (2.0 * h), d_vel[:, :, idx], atol=1e-5)
            assert np.allclose((tp - tm) / (2.0 * h), d_tau[:, idx], atol=1e-9)

    def test_shape_samples_independent_of_period(self):
        # samples sit at fixed phase fractions: T cannot move the shapes
        d_shape, _, _ = coefficient_jacobian(random_gait(10), 40)
        assert np.allclose(d_shape[:, :, -1], 0.0)
