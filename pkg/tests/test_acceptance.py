"""End-to-end checks of the package's headline behaviors.

Each test emits one PASS/FAIL line (visible with -s; pytest -v also shows
one line per criterion).  The two momentum sweeps are expensive and shared
across several tests through session fixtures.
"""

import numpy as np
import pytest

from momgait import connection, linkage, optimize, simulate
from momgait.gait import Gait


def _report(name, ok):
    print(f"{name}: {'PASS' if bool(ok) else 'FAIL'}")
    assert ok, name


@pytest.fixture(scope="session")
def swimmer_sweep(swimmer_grid):
    return optimize.sweep(swimmer_grid, "x")


@pytest.fixture(scope="session")
def snake_sweep(snake_grid):
    return optimize.sweep(snake_grid, "theta")


def test_01_momentum_conservation(snake_grid):
    dyn = simulate.ExactDynamics(snake_grid)
    gait = Gait.point([1.0, 2.0], period=10.0)
    drift, _ = simulate.momentum_drift(dyn, gait, np.array([0.0, 0.0, 1.0]),
                                       steps=400)
    # pure angular spatial momentum is preserved exactly (its coadjoint
    # orbit is a point), so the order check mixes in translation
    p = np.array([0.3, -0.2, 1.0])
    d1, _ = simulate.momentum_drift(dyn, gait, p, steps=400)
    d2, _ = simulate.momentum_drift(dyn, gait, p, steps=800)
    _report("01 momentum conservation", drift < 1e-8 and d1 / d2 >= 12.0)


def test_02_flux_estimate_shrinking_circles(swimmer_grid):
    dyn = simulate.ExactDynamics(swimmer_grid)
    errs = []
    for radius in (0.2, 0.1, 0.05):
        gait = Gait.circle([0.0, 0.0], radius, period=2.0)
        traj = simulate.integrate_gait(dyn, gait, np.zeros(3), steps=200)
        est = optimize.estimate_displacement(
            swimmer_grid, gait, np.zeros(3), trajectory=traj
        )
        dx = traj.poses[-1, 0] - traj.poses[0, 0]
        errs.append(abs(est[0] - dx) / abs(dx))
    ok = errs[0] <= 0.05 and errs[0] > errs[1] > errs[2]
    _report("02 flux estimate vs integration, shrinking circles", ok)


def test_03_estimate_with_momentum(snake_grid, snake_sweep):
    level = 0.5 * snake_sweep.crossover
    p = optimize.momentum_vector("theta", level)
    gait = Gait.circle([np.pi - 0.14, np.pi - 0.14], 0.2, period=2.0)
    dyn = simulate.ExactDynamics(snake_grid)
    traj = simulate.integrate_gait(dyn, gait, p, steps=400)
    est = optimize.estimate_displacement(snake_grid, gait, p, trajectory=traj)
    dth = traj.poses[-1, 2] - traj.poses[0, 2]
    _report("03 lifted estimate with momentum", abs(est[2] - dth) / abs(dth) <= 0.05)


def _fd_exact_gradient(dyn, problem, gait, h=1e-5, steps=120):
    pars = gait.to_params()
    scale = np.maximum(1.0, np.abs(pars))
    gaits = []
    for i in range(pars.size):
        for sgn in (1.0, -1.0):
            q = pars.copy()
            q[i] += sgn * h * scale[i]
            gaits.append(Gait.from_params(q, gait.n_joints))
    traj = simulate.integrate_gaits(dyn, gaits, problem.p, steps=steps)
    disp = traj.poses[:, -1, problem.fiber] - traj.poses[:, 0, problem.fiber]
    vels = (disp / np.array([g.period for g in gaits])).reshape(-1, 2)
    return (vels[:, 0] - vels[:, 1]) / (2.0 * h * scale)


def test_04_gradient_fidelity(swimmer_grid, snake_grid):
    rng = np.random.default_rng(7)
    ok = True
    for grid, direction, center in (
        (swimmer_grid, "x", 0.0),
        (snake_grid, "theta", np.pi),
    ):
        dyn = simulate.ExactDynamics(grid)
        for momentum in (0.0, 0.2):
            problem = optimize.Problem(
                grid=grid, direction=direction, momentum=momentum
            )
            for _ in range(5):
                coeffs = np.zeros((2, 9))
                coeffs[:, 0] = center
                coeffs[:, 1:5] = 0.2 * rng.standard_normal((2, 4))
                gait = Gait(coeffs, 2.0 + rng.uniform(0.0, 1.0))
                while gait.amplitude() > 0.5:
                    shrunk = gait.coeffs.copy()
                    shrunk[:, 1:] *= 0.8
                    gait = Gait(shrunk, gait.period)
                _, grad, _ = optimize.velocity_and_gradient(problem, gait)
                fd = _fd_exact_gradient(dyn, problem, gait)
                cos = grad @ fd / (np.linalg.norm(grad) * np.linalg.norm(fd))
                ratio = np.linalg.norm(grad) / np.linalg.norm(fd)
                ok = ok and cos >= 0.99 and 0.9 <= ratio <= 1.1
    _report("04 geometric gradient matches finite differences", ok)


def test_05_minimum_inertia_shapes(swimmer_grid, snake_grid):
    h = snake_grid.h
    snake_shape = connection.minimum_inertia_shape(snake_grid, "theta")
    swim_shape = connection.minimum_inertia_shape(swimmer_grid, "x")
    ok = (
        np.abs(np.mod(snake_shape, 2.0 * np.pi) - np.pi).max() <= h
        and np.abs(np.remainder(swim_shape + np.pi, 2.0 * np.pi) - np.pi).max() <= h
    )
    _report("05 minimum-inertia shapes at expected centers", ok)


def test_06_power_balance(swimmer_grid, swimmer_sweep):
    gait = swimmer_sweep.levels[0].gait
    dyn = simulate.ExactDynamics(swimmer_grid)
    _, traj = simulate.evaluate_gait(dyn, gait, np.zeros(3), steps=800)
    ke = simulate._kinetic_energy(
        dyn, traj.shapes[0], traj.shape_velocities[0], traj.poses[0],
        traj.momentum,
    )
    dt = traj.times[0, 1] - traj.times[0, 0]
    dke = (ke[2:] - ke[:-2]) / (2.0 * dt)
    power = np.sum(traj.forces[0] * traj.shape_velocities[0], axis=1)[1:-1]
    err = np.abs(dke - power).max() / np.abs(power).max()
    _report("06 actuator power balances kinetic-energy rate", err < 1e-3)


def test_07_optimal_dominates_baselines(swimmer_sweep, snake_sweep):
    ok = True
    for sweep in (swimmer_sweep, snake_sweep):
        for lv in sweep.levels:
            bar = max(lv.velocity_kinematic, lv.velocity_momentum)
            ok = ok and lv.velocity >= bar - 0.01 * abs(bar)
    _report("07 optimal velocity dominates both baselines", ok)


def test_08_transition_character(swimmer_sweep, snake_sweep):
    swim = np.array([lv.amplitude for lv in swimmer_sweep.levels])
    mono = np.all(swim[1:] <= swim[:-1] * (1.0 + 1e-6))
    changes = np.abs(np.diff(swim)) / np.maximum(swim[:-1], 1e-12)
    continuous = mono and changes.max() < 0.30

    snake = np.array([lv.amplitude for lv in snake_sweep.levels])
    drops = (snake[:-1] - snake[1:]) / np.maximum(snake[:-1], 1e-12)
    discrete = int(np.sum(drops > 0.5)) == 1
    _report("08 continuous swimmer / discrete snake transition",
            continuous and discrete)


def test_09_two_peak_structure(snake_grid, snake_sweep):
    cross = snake_sweep.crossover
    radii = np.linspace(0.0, 2.6, 40)
    results = {}
    for tag, level in (("low", 0.2 * cross), ("cross", cross), ("high", 10.0 * cross)):
        samples = optimize.circle_sweep(snake_grid, radii, [level])
        v = np.array([s.velocity_total for s in samples])
        interior = (v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])
        peaks = set(np.nonzero(interior)[0] + 1)
        if v[0] > v[1]:
            peaks.add(0)
        if v[-1] > v[-2]:
            peaks.add(len(v) - 1)
        results[tag] = (int(np.argmax(v)), peaks)
    ok = (
        results["low"][0] not in (0, len(radii) - 1)
        and len(results["cross"][1]) >= 2
        and 0 in results["cross"][1]
        and any(i not in (0, len(radii) - 1) for i in results["cross"][1])
        and results["high"][0] == 0
    )
    _report("09 circle-radius scan peak structure across momentum", ok)


def test_10_effort_constraint_active(swimmer_sweep, snake_sweep):
    e1 = swimmer_sweep.levels[0].effort
    e2 = snake_sweep.levels[0].effort
    ok = 0.98 <= e1 <= 1.0 and 0.98 <= e2 <= 1.0
    _report("10 effort bound active at the zero-momentum optima", ok)


def test_11_coordinate_choice_improves_estimate(swimmer_grid):
    raw_grid = connection.build_grid(linkage.swimmer(), optimize_coords=False)
    gait = Gait.circle([0.0, 0.0], 1.0, period=2.0)

    def err(grid):
        dyn = simulate.ExactDynamics(grid)
        traj = simulate.integrate_gait(dyn, gait, np.zeros(3), steps=400)
        est = optimize.estimate_displacement(grid, gait, np.zeros(3),
                                             trajectory=traj)
        dx = traj.poses[-1, 0] - traj.poses[0, 0]
        return abs(est[0] - dx) / abs(dx)

    _report("11 tuned body frame sharpens the flux estimate",
            err(swimmer_grid) < err(raw_grid))
