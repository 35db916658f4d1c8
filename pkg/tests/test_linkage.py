import numpy as np
import pytest

from momgait import linkage, se2


def _rot(t):
    c, s = np.cos(t), np.sin(t)
    m = np.eye(3)
    m[:2, :2] = [[c, -s], [s, c]]
    return m


def _trans(x, y=0.0):
    m = np.eye(3)
    m[0, 2], m[1, 2] = x, y
    return m


class TestLinkGeometry:
    def test_validation(self):
        with pytest.raises(ValueError):
            linkage.LinkGeometry(length=0.0)
        with pytest.raises(ValueError):
            linkage.LinkGeometry(length=1.0, aspect_ratio=1.5)
        with pytest.raises(ValueError):
            linkage.LinkGeometry(length=1.0, body_density=-1.0)

    def test_dry_link_inertia(self):
        # elliptical plate: m = rho pi a b, J = m (a^2 + b^2) / 4
        g = linkage.LinkGeometry(length=2.0, aspect_ratio=0.5, body_density=3.0)
        m = linkage.link_inertia(g)
        mass = 3.0 * np.pi * 1.0 * 0.5
        assert m[0, 0] == pytest.approx(mass)
        assert m[1, 1] == pytest.approx(mass)
        assert m[2, 2] == pytest.approx(mass * (1.0 + 0.25) / 4.0)
        assert np.count_nonzero(m - np.diag(np.diag(m))) == 0

    def test_added_mass_values(self):
        # potential-flow added inertia of a translating/rotating ellipse
        g = linkage.LinkGeometry(length=1.0, aspect_ratio=0.1, body_density=1.0,
                                 fluid_density=1.0)
        m = linkage.link_inertia(g)
        a, b = 0.5, 0.05
        mass = np.pi * a * b
        assert m[0, 0] == pytest.approx(mass + np.pi * b**2)
        assert m[1, 1] == pytest.approx(mass + np.pi * a**2)
        assert m[2, 2] == pytest.approx(
            mass * (a**2 + b**2) / 4.0 + np.pi / 8.0 * (a**2 - b**2) ** 2
        )
        # the broadside added mass dominates the slender link's own mass
        assert m[1, 1] > 5.0 * mass

    def test_presets(self):
        sw = linkage.swimmer()
        assert sw.n_links == 3 and sw.n_joints == 2
        assert all(g.length == 1.0 and g.fluid_density == 1.0 for g in sw.links)
        sn = linkage.snake()
        assert [g.length for g in sn.links] == [1.0, 2.0, 1.0]
        assert all(g.fluid_density == 0.0 for g in sn.links)
        assert sn.middle == 1

    def test_even_chain_rejected(self):
        link = linkage.LinkGeometry(1.0)
        with pytest.raises(ValueError):
            linkage.SystemModel((link, link))


class TestChainFrames:
    def test_straight_configuration(self):
        sn = linkage.snake()
        frames, _ = linkage.chain_frames(sn, [0.0, 0.0])
        # arms extend 0.5 beyond each end of the length-2 center link
        assert np.allclose(frames[0], [-1.5, 0.0, 0.0])
        assert np.allclose(frames[1], [0.0, 0.0, 0.0])
        assert np.allclose(frames[2], [1.5, 0.0, 0.0])

    def test_matches_manual_composition(self):
        sn = linkage.snake()
        a1, a2 = 0.3, -0.7
        l0, l1, l2 = (g.length for g in sn.links)
        left = _trans(-l1 / 2) @ _rot(a1) @ _trans(-l0 / 2)
        right = _trans(l1 / 2) @ _rot(-a2) @ _trans(l2 / 2)
        frames, _ = linkage.chain_frames(sn, [a1, a2])
        for h, f in ((left, frames[0]), (right, frames[2])):
            assert np.allclose(
                f, [h[0, 2], h[1, 2], np.arctan2(h[1, 0], h[0, 0])]
            )

    def test_folded_configuration(self):
        # at (pi, pi) both arms fold back along the center link
        sn = linkage.snake()
        frames, _ = linkage.chain_frames(sn, [np.pi, np.pi])
        assert np.allclose(frames[0][:2], [-0.5, 0.0], atol=1e-12)
        assert np.allclose(frames[2][:2], [0.5, 0.0], atol=1e-12)

    def test_jacobian_against_finite_differences(self):
        sw = linkage.swimmer()
        rng = np.random.default_rng(5)
        r = rng.uniform(0.0, 2.0 * np.pi, 2)
        _, jac = linkage.chain_frames(sw, r)
        h = 1e-6
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fp, _ = linkage.chain_frames(sw, r + e)
            fm, _ = linkage.chain_frames(sw, r - e)
            for i in range(3):
                dp = (fp[i] - fm[i]) / (2.0 * h)
                c, s = np.cos(fp[i][2] / 2 + fm[i][2] / 2), np.sin(
                    fp[i][2] / 2 + fm[i][2] / 2
                )
                body = np.array(
                    [c * dp[0] + s * dp[1], -s * dp[0] + c * dp[1], dp[2]]
                )
                assert np.allclose(jac[i][:, 3 + j], body, atol=1e-6)

    def test_forward_kinematics_wraps_frames(self):
        sw = linkage.swimmer()
        poses = linkage.forward_kinematics(sw, [0.4, 1.2])
        frames, _ = linkage.chain_frames(sw, [0.4, 1.2])
        for g, f in zip(poses, frames):
            assert np.allclose(g.as_array(), [f[0], f[1], se2.wrap_angle(f[2])])


class TestMassMatrix:
    def test_symmetric_positive_definite(self):
        rng = np.random.default_rng(1)
        for model in (linkage.swimmer(), linkage.snake()):
            for _ in range(20):
                r = rng.uniform(0.0, 2.0 * np.pi, 2)
                m = linkage.mass_matrix(model, r)
                assert np.allclose(m, m.T, atol=1e-12)
                assert np.min(np.linalg.eigvalsh(m)) > 0.0

    def test_translation_block_is_total_mass_for_dry_chain(self):
        # without fluid the translational inertia is shape-independent
        sn = linkage.snake()
        m = linkage.mass_matrix(sn, [0.4, 1.1])
        assert m[0, 0] == pytest.approx(sn.total_mass)
        assert m[1, 1] == pytest.approx(sn.total_mass)

    def test_kinetic_energy_against_per_link_sum(self):
        rng = np.random.default_rng(7)
        for model in (linkage.swimmer(), linkage.snake()):
            for _ in range(5):
                r = rng.uniform(0.0, 2.0 * np.pi, 2)
                xi = rng.normal(size=3)
                rdot = rng.normal(size=2)
                v = np.concatenate([xi, rdot])
                ke = 0.5 * v @ linkage.mass_matrix(model, r) @ v
                assert ke == pytest.approx(
                    self._ke_direct(model, r, xi, rdot), rel=1e-6
                )

    @staticmethod
    def _ke_direct(model, r, xi, rdot, h=1e-6):
        """Sum per-link energies with link velocities from differenced poses."""
        total = 0.0
        fr0, _ = linkage.chain_frames(model, r)
        frp, _ = linkage.chain_frames(model, r + h * np.asarray(rdot))
        frm, _ = linkage.chain_frames(model, r - h * np.asarray(rdot))
        mloc = model.local_inertias()
        for i in range(model.n_links):
            gi = se2.GroupElement(*fr0[i])
            dp = (frp[i] - frm[i]) / (2.0 * h)
            c, s = np.cos(fr0[i][2]), np.sin(fr0[i][2])
            local = np.array([c * dp[0] + s * dp[1], -s * dp[0] + c * dp[1], dp[2]])
            xi_i = se2.adjoint_inverse(gi) @ np.asarray(xi) + local
            total += 0.5 * xi_i @ mloc[i] @ xi_i
        return total

    def test_mirror_symmetry(self):
        # swapping joints mirrors the chain across the body y axis
        rng = np.random.default_rng(3)
        s = np.diag([-1.0, 1.0, -1.0])
        w = np.zeros((5, 5))
        w[:3, :3] = s
        w[3, 4] = 1.0
        w[4, 3] = 1.0
        for model in (linkage.swimmer(), linkage.snake()):
            for _ in range(5):
                r = rng.uniform(0.0, 2.0 * np.pi, 2)
                m1 = linkage.mass_matrix(model, r)
                m2 = linkage.mass_matrix(model, r[::-1])
                assert np.allclose(m1, w.T @ m2 @ w, atol=1e-10)

    def test_batched_matches_scalar(self):
        sw = linkage.swimmer()
        rng = np.random.default_rng(9)
        rs = rng.uniform(0.0, 2.0 * np.pi, (6, 2))
        batched = linkage.mass_matrix(sw, rs)
        for k in range(6):
            assert np.allclose(batched[k], linkage.mass_matrix(sw, rs[k]))

    def test_inertia_matrix_blocks(self):
        sn = linkage.snake()
        blocks = linkage.inertia_matrix(sn, [0.7, 1.9])
        full = linkage.mass_matrix(sn, [0.7, 1.9])
        assert np.allclose(blocks.M_gg, full[:3, :3])
        assert np.allclose(blocks.M_gr, full[:3, 3:])
        assert np.allclose(blocks.M_rr, full[3:, 3:])
