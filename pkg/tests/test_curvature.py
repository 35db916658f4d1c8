import numpy as np
import pytest

from momgait import curvature, se2, simulate


def _tomat(g):
    c, s = np.cos(g[2]), np.sin(g[2])
    return np.array([[c, -s, g[0]], [s, c, g[1]], [0.0, 0.0, 1.0]])


def _integrate_piecewise(dyn, segments, p, nsub=200):
    """RK4 along a piecewise shape path given as (r(t), rdot(t), duration)."""
    g = np.zeros(3)
    for rf, rdf, dur in segments:
        dt = dur / nsub
        for k in range(nsub):
            t = k * dt

            def xi(gv, tt):
                a, mgi, _ = dyn.connection_at(rf(tt)[None, :])
                return -a[0] @ rdf(tt) + mgi[0] @ se2.dual_adjoint_apply_arr(gv, p)

            k1 = simulate._gdot(g, xi(g, t))
            k2 = simulate._gdot(g + dt / 2 * k1, xi(g + dt / 2 * k1, t + dt / 2))
            k3 = simulate._gdot(g + dt / 2 * k2, xi(g + dt / 2 * k2, t + dt / 2))
            k4 = simulate._gdot(g + dt * k3, xi(g + dt * k3, t + dt))
            g = g + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return g


def _loop_defect(dyn, segs_a, segs_b, p, eps):
    ga = _integrate_piecewise(dyn, segs_a, p)
    gb = _integrate_piecewise(dyn, segs_b, p)
    loop = _tomat(ga) @ np.linalg.inv(_tomat(gb))
    return se2.log(se2.GroupElement.from_matrix(loop)).as_array() / eps**2


def _commutator_estimate(dyn, r0, axis, p, eps):
    """Move-then-dwell vs dwell-then-move defect, an O(eps) estimate of D_it."""
    e = np.zeros(2)
    e[axis] = 1.0
    move = (lambda t: r0 + t * e, lambda t: e, eps)
    dwell0 = (lambda t: r0, lambda t: np.zeros(2), eps)
    dwell1 = (lambda t: r0 + eps * e, lambda t: np.zeros(2), eps)
    return _loop_defect(dyn, [move, dwell1], [dwell0, move], p, eps)


def _richardson(f, eps):
    return 2.0 * f(eps / 2.0) - f(eps)


class TestKinematicCurvature:
    def test_square_loop_commutator(self, swimmer_grid):
        # the holonomy of a small shape square measures D12 directly
        dyn = simulate.ExactDynamics(swimmer_grid)
        r0 = np.array([0.8, 5.3])
        p = np.zeros(3)

        def defect(eps):
            e1 = np.array([1.0, 0.0])
            e2 = np.array([0.0, 1.0])
            segs = [
                (lambda t: r0 + t * e1, lambda t: e1, eps),
                (lambda t: r0 + eps * e1 + t * e2, lambda t: e2, eps),
                (lambda t: r0 + eps * e1 + eps * e2 - t * e1, lambda t: -e1, eps),
                (lambda t: r0 + eps * e2 - t * e2, lambda t: -e2, eps),
            ]
            g = _integrate_piecewise(dyn, segs, p)
            return se2.log(se2.GroupElement(*g)).as_array() / eps**2

        est = _richardson(defect, 0.08)
        d12 = curvature.ccf(
            swimmer_grid, r0, se2.GroupElement.identity(), p
        ).D12
        assert np.allclose(est, d12, rtol=0.03, atol=2e-4)

    def test_snapshot_matches_grid_component(self, swimmer_grid):
        snap = curvature.ccf_grid_snapshot(swimmer_grid, np.zeros(3))
        assert snap["D12"].shape == (64, 64, 3)
        assert np.allclose(snap["D12"], swimmer_grid.node_field("D12"), atol=1e-9)
        assert np.allclose(snap["D1t"], 0.0)
        assert np.allclose(snap["D2t"], 0.0)

    def test_antisymmetry_in_shape_arguments(self, swimmer_grid):
        # reversing the loop orientation flips the sign of the holonomy
        snap = curvature.ccf_grid_snapshot(swimmer_grid, np.zeros(3))
        d12 = snap["D12"][7, 12]
        u = np.array([1.0, 0.0, 0.0])
        v = np.array([0.0, 1.0, 0.0])
        f = curvature.two_form_apply(d12, np.zeros(3), np.zeros(3), u, v)
        b = curvature.two_form_apply(d12, np.zeros(3), np.zeros(3), v, u)
        assert np.allclose(f, -b)
        assert np.allclose(f, d12)


class TestDriftCurvature:
    def test_drift_columns_vanish_at_zero_momentum(self, snake_grid):
        s = curvature.ccf(
            snake_grid, [1.2, 2.5], se2.GroupElement.identity(), np.zeros(3)
        )
        assert np.allclose(s.D1t, 0.0)
        assert np.allclose(s.D2t, 0.0)

    def test_rotational_momentum_commutator(self, snake_grid):
        dyn = simulate.ExactDynamics(snake_grid)
        r0 = np.array([2.0, 1.3])
        p = np.array([0.0, 0.0, 1.0])
        ref = curvature.ccf(snake_grid, r0, se2.GroupElement.identity(), p)
        est = _richardson(
            lambda e: _commutator_estimate(dyn, r0, 0, p, e), 0.08
        )
        assert np.allclose(est, ref.D1t, rtol=0.05, atol=5e-3)

    def test_mixed_momentum_commutator_both_axes(self, swimmer_grid):
        dyn = simulate.ExactDynamics(swimmer_grid)
        r0 = np.array([0.7, 5.5])
        p = np.array([1.0, 0.5, 0.3])
        ref = curvature.ccf(swimmer_grid, r0, se2.GroupElement.identity(), p)
        for axis, expect in ((0, ref.D1t), (1, ref.D2t)):
            est = _richardson(
                lambda e: _commutator_estimate(dyn, r0, axis, p, e), 0.06
            )
            assert np.allclose(est, expect, rtol=0.08, atol=8e-3)

    def test_linear_in_momentum(self, snake_grid):
        g = se2.GroupElement(0.4, -1.0, 0.7)
        a = curvature.ccf(snake_grid, [1.0, 4.0], g, [0.0, 0.0, 1.0])
        b = curvature.ccf(snake_grid, [1.0, 4.0], g, [0.0, 0.0, 3.0])
        assert np.allclose(3.0 * a.D1t, b.D1t, atol=1e-12)
        assert np.allclose(3.0 * a.D2t, b.D2t, atol=1e-12)


class TestLiftedConnection:
    def test_reconstruct_matches_reconstruction_equation(self, snake_grid):
        r = np.array([1.1, 2.2])
        g = se2.GroupElement(0.5, -0.2, 0.3)
        p = np.array([0.2, -0.1, 0.8])
        s = curvature.lifted_connection(snake_grid, r, g, p)
        rd = np.array([0.7, -1.3])
        out = snake_grid.query(r[None, :], names=("A", "Mgg_inv"))
        expect = -out["A"][0] @ rd + out["Mgg_inv"][0] @ se2.dual_adjoint(
            g, se2.Covector.from_array(p)
        ).as_array()
        assert np.allclose(s.reconstruct(rd), expect, atol=1e-12)

    def test_batch_matches_single(self, swimmer_grid):
        rng = np.random.default_rng(11)
        pts = rng.uniform(0.0, 2.0 * np.pi, (6, 2))
        poses = rng.normal(size=(6, 3))
        p = np.array([0.3, 0.4, -0.2])
        res = curvature.ccf_batch(swimmer_grid, pts, poses, p)
        for k in range(6):
            single = curvature.ccf(
                swimmer_grid, pts[k], se2.GroupElement(*poses[k]), p
            )
            assert np.allclose(res["D12"][k], single.D12, atol=1e-12)
            assert np.allclose(res["D1t"][k], single.D1t, atol=1e-9)
            assert np.allclose(res["D2t"][k], single.D2t, atol=1e-9)
