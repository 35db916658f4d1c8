"""Effort-constrained gait optimization with geometric gradients.

The objective (average velocity in one fiber direction) is always evaluated
by exact integration of the reconstruction equation; the displacement
gradient comes from the curvature flux swept by waypoint variations plus
the endpoint drift term of the nonclosed lifted gait, and the effort
gradient from central finite differences.  The constrained solve is an
augmented-Lagrangian outer loop around a bound-constrained quasi-Newton
inner solve (the period is bounded below).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from momgait import curvature, se2, simulate
from momgait.connection import FIBER_INDEX, ShapeGrid, minimum_inertia_shape
from momgait.gait import Gait, T_MIN, coefficient_jacobian
from momgait.simulate import GridDynamics, ExactDynamics

EFFORT_BOUND = 1.0


def momentum_vector(direction: str, level: float) -> np.ndarray:
    p = np.zeros(3)
    p[FIBER_INDEX[direction]] = level
    return p


@dataclass(frozen=True)
class Problem:
    """One constrained gait-optimization instance."""

    grid: ShapeGrid
    direction: str
    momentum: float
    effort_bound: float = EFFORT_BOUND
    n_waypoints: int = 100
    opt_steps: int = 200
    report_steps: int = simulate.DEFAULT_STEPS
    max_iterations: int = 300
    kkt_tolerance: float = 1e-4
    initial_gait: Gait | None = None

    @property
    def p(self) -> np.ndarray:
        return momentum_vector(self.direction, self.momentum)

    @property
    def fiber(self) -> int:
        return FIBER_INDEX[self.direction]


@dataclass(frozen=True)
class SolveResult:
    gait: Gait
    outcome: simulate.GaitOutcome
    converged: bool
    iterations: int
    kkt_residual: float


# ---------------------------------------------------------------------------
# displacement estimate and geometric gradient

_S_NODES, _S_WEIGHTS = np.polynomial.legendre.leggauss(8)
_S_NODES = 0.5 * (_S_NODES + 1.0)
_S_WEIGHTS = 0.5 * _S_WEIGHTS


def estimate_displacement(grid: ShapeGrid, gait: Gait, p, trajectory=None, steps: int = 200):
    """Curvature-flux estimate of the per-cycle displacement (se(2)-valued).

    The lifted gait is closed by a time-like leg at the end shape; the
    estimate is the flux through the cone surface between the lifted curve
    and that leg, plus the drift accumulated along the leg.  Drift terms
    are evaluated at the integrated poses.
    """
    dyn = GridDynamics(grid)
    if trajectory is None:
        trajectory = simulate.integrate_gait(dyn, gait, p, steps=steps)
    t = trajectory.times
    shapes = trajectory.shapes
    vels = trajectory.shape_velocities
    poses = trajectory.poses
    m1 = len(t)
    apex = shapes[0]
    u = shapes - apex  # (m1, 2)

    # surface points for all (t, s) quadrature nodes
    ns = len(_S_NODES)
    pts = apex + _S_NODES[None, :, None] * u[:, None, :]  # (m1, ns, 2)
    pose_rep = np.repeat(poses[:, None, :], ns, axis=1)
    res = curvature.ccf_batch(grid, pts.reshape(-1, 2), pose_rep.reshape(-1, 3), p)
    d12 = res["D12"].reshape(m1, ns, 3)
    d1t = res["D1t"].reshape(m1, ns, 3)
    d2t = res["D2t"].reshape(m1, ns, 3)

    # tangents of the cone surface: dS/dt = (s a', 1), dS/ds = (u, 0)
    du_dt = np.concatenate([vels, np.ones((m1, 1))], axis=1)  # lifted curve rate
    tan_t = np.empty((m1, ns, 3))
    tan_t[..., :2] = _S_NODES[None, :, None] * du_dt[:, None, :2]
    tan_t[..., 2] = 1.0
    tan_s = np.zeros((m1, ns, 3))
    tan_s[..., :2] = u[:, None, :]
    integrand = curvature.two_form_apply(d12, d1t, d2t, tan_s, tan_t)
    over_s = np.einsum("s,msk->mk", _S_WEIGHTS, integrand)
    flux = np.trapezoid(over_s, t, axis=0)

    # drift along the closing time leg at the end shape
    mgi = grid.query(apex[None, :], names=("Mgg_inv",))["Mgg_inv"][0]
    drift_rate = np.einsum("ij,mj->mi", mgi, se2.dual_adjoint_apply_arr(poses, np.asarray(p, float)))
    drift = np.trapezoid(drift_rate, t, axis=0)
    return flux + drift


def displacement_gradient(problem: Problem, gait: Gait, trajectory=None):
    """Gradient of the per-cycle displacement component over (coeffs, T).

    Interior product of the waypoint variations with the curvature along
    the integrated trajectory (tangential parts drop out), plus the
    endpoint drift term for the period parameter.
    """
    grid = problem.grid
    p = problem.p
    fib = problem.fiber
    dyn = GridDynamics(grid)
    n = problem.n_waypoints
    if trajectory is None:
        traj = simulate.integrate_gait(dyn, gait, p, steps=n)
    else:
        traj = trajectory
    t = traj.times
    shapes = traj.shapes
    vels = traj.shape_velocities
    poses = traj.poses
    m1 = len(t)

    res = curvature.ccf_batch(grid, shapes, poses, p)
    d12, d1t, d2t = res["D12"][..., fib], res["D1t"][..., fib], res["D2t"][..., fib]

    d_shape, _, d_tau = coefficient_jacobian(gait, m1 - 1)
    # lifted variation per parameter: (m1, 3, npar)
    var = np.concatenate([d_shape, d_tau[:, None, :]], axis=1)
    # lifted curve tangent (rate form): (m1, 3)
    tang = np.concatenate([vels, np.ones((m1, 1))], axis=1)

    # remove the tangential part of the variation (pure reparameterization)
    that = tang / np.linalg.norm(tang, axis=1, keepdims=True)
    var = var - that[:, :, None] * np.einsum("mk,mkp->mp", that, var)[:, None, :]

    # interior product: D(var, phidot) per waypoint, selected fiber component
    c12 = var[:, 0, :] * tang[:, 1, None] - var[:, 1, :] * tang[:, 0, None]
    c1t = var[:, 0, :] * tang[:, 2, None] - var[:, 2, :] * tang[:, 0, None]
    c2t = var[:, 1, :] * tang[:, 2, None] - var[:, 2, :] * tang[:, 1, None]
    integrand = (
        d12[:, None] * c12 + d1t[:, None] * c1t + d2t[:, None] * c2t
    )
    grad = np.trapezoid(integrand, t, axis=0)

    # endpoint drift term: only the period moves the lifted endpoint in time
    mgi = grid.query(shapes[-1][None, :], names=("Mgg_inv",))["Mgg_inv"][0]
    drift_end = (mgi @ se2.dual_adjoint_apply_arr(poses[-1], p))[fib]
    grad[-1] += drift_end
    return grad


def velocity_and_gradient(problem: Problem, gait: Gait):
    """Average velocity (exact objective) and its geometric gradient."""
    dyn = GridDynamics(problem.grid)
    traj = simulate.integrate_gait(dyn, gait, problem.p, steps=problem.opt_steps)
    disp = traj.poses[-1] - traj.poses[0]
    vel = disp[problem.fiber] / gait.period

    # gradient waypoints reuse a decimated trajectory at the waypoint count
    stride = max(1, problem.opt_steps // problem.n_waypoints)
    sub = simulate.Trajectory(
        times=traj.times[::stride],
        shapes=traj.shapes[::stride],
        shape_velocities=traj.shape_velocities[::stride],
        poses=traj.poses[::stride],
        body_velocities=traj.body_velocities[::stride],
        shape_momentum=traj.shape_momentum[::stride],
        momentum=traj.momentum,
    )
    dgrad = displacement_gradient(problem, gait, trajectory=sub)
    grad = dgrad / gait.period
    grad[-1] -= disp[problem.fiber] / gait.period**2
    return vel, grad, traj


# ---------------------------------------------------------------------------
# effort and its finite-difference gradient

_EFFORT_FD_REL = 1e-5


def effort(problem: Problem, gait: Gait) -> float:
    dyn = GridDynamics(problem.grid)
    return simulate.average_effort(dyn, gait, problem.p, steps=problem.opt_steps)


def effort_gradient(problem: Problem, gait: Gait) -> np.ndarray:
    """Central finite differences of the average effort over (coeffs, T)."""
    dyn = GridDynamics(problem.grid)
    params = gait.to_params()
    npar = params.size
    steps = np.maximum(1.0, np.abs(params)) * _EFFORT_FD_REL
    gaits = []
    for i in range(npar):
        for sgn in (+1.0, -1.0):
            q = params.copy()
            q[i] += sgn * steps[i]
            q[-1] = max(q[-1], T_MIN)
            gaits.append(Gait.from_params(q, gait.n_joints))
    nfd = max(simulate.MIN_STEPS, problem.opt_steps // 2)
    traj = simulate.integrate_gaits(dyn, gaits, problem.p, steps=nfd)
    u = simulate.actuator_forces(dyn, traj)
    vals = simulate.effort_from_forces(traj.times, u)
    vals = vals.reshape(npar, 2)
    return (vals[:, 0] - vals[:, 1]) / (2.0 * steps)


# ---------------------------------------------------------------------------
# constrained solver: augmented Lagrangian over an L-BFGS-B inner solve

def _ensure_feasible(problem: Problem, gait: Gait) -> Gait:
    """Slow the gait (stretch T) until the effort constraint holds."""
    g = gait
    for _ in range(60):
        if effort(problem, g) <= problem.effort_bound:
            return g
        g = Gait(g.coeffs, g.period * 1.5)
    raise ArithmeticError("could not find a feasible starting gait")


def _polish_period(problem: Problem, gait: Gait, band=(0.985, 1.0)) -> Gait:
    """Retune the period so the exactly evaluated effort binds the bound.

    Effort falls and velocity magnitude falls as the cycle slows, so the
    best feasible period puts the effort just inside the bound.  Amplitude
    coefficients are held fixed; only T moves.
    """
    dyn = ExactDynamics(problem.grid)
    c = problem.effort_bound

    def eff(T):
        return simulate.average_effort(
            dyn, Gait(gait.coeffs, T), problem.p, steps=problem.report_steps
        )

    lo = hi = gait.period
    e = eff(gait.period)
    if e > c:
        while eff(hi) > c and hi < 1e4:
            lo, hi = hi, hi * 1.3
    elif e < band[0] * c:
        while eff(lo) < band[0] * c:
            if lo <= T_MIN:
                # the bound cannot bind even at the fastest allowed pace
                return Gait(gait.coeffs, T_MIN)
            lo, hi = max(T_MIN, lo / 1.3), lo
    else:
        return gait
    for _ in range(60):
        mid = np.sqrt(lo * hi)
        e = eff(mid)
        if band[0] * c <= e <= c:
            return Gait(gait.coeffs, mid)
        if e > c:
            lo = mid
        else:
            hi = mid
    return Gait(gait.coeffs, hi)


def solve(problem: Problem) -> SolveResult:
    """Maximize average velocity subject to the average-effort bound."""
    gait0 = problem.initial_gait
    if gait0 is None:
        ctr = minimum_inertia_shape(problem.grid, problem.direction)
        gait0 = Gait.circle(ctr, 0.3, period=5.0)
    gait0 = _ensure_feasible(problem, gait0)
    nj = gait0.n_joints
    c = problem.effort_bound

    lam = 0.0
    mu = 10.0
    x = gait0.to_params()
    bounds = [(None, None)] * (x.size - 1) + [(T_MIN, None)]
    evals = 0
    kkt = np.inf

    def aug(x):
        nonlocal evals
        evals += 1
        g = Gait.from_params(x, nj)
        vel, vgrad, traj = velocity_and_gradient(problem, g)
        u = simulate.actuator_forces(GridDynamics(problem.grid), traj)
        eff = float(simulate.effort_from_forces(traj.times, u))
        egrad = effort_gradient(problem, g)
        viol = eff - c
        act = lam + mu * viol
        if act > 0.0:
            f = -vel + lam * viol + 0.5 * mu * viol**2
            gr = -vgrad + act * egrad
        else:
            f = -vel - 0.5 * lam**2 / mu
            gr = -vgrad
        return f, gr, eff, vgrad, egrad

    last = {}

    def fun(x):
        f, gr, eff, vgrad, egrad = aug(x)
        last.update(eff=eff, vgrad=vgrad, egrad=egrad, x=x.copy())
        return f, gr

    for outer in range(12):
        inner_budget = max(10, (problem.max_iterations - evals) // 2)
        res = minimize(
            fun,
            x,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": inner_budget, "ftol": 1e-12, "gtol": 1e-7},
        )
        x = res.x
        f, gr, eff, vgrad, egrad = aug(x)
        viol = eff - c
        lam = max(0.0, lam + mu * viol)
        # KKT residual: projected stationarity + complementarity + violation
        stat = -vgrad + lam * egrad
        if x[-1] <= T_MIN + 1e-12:
            # at the period bound only descent directions into the bound count
            stat[-1] = min(stat[-1], 0.0)
        kkt = max(
            np.max(np.abs(stat)),
            abs(lam * viol),
            max(0.0, viol),
        )
        if kkt < problem.kkt_tolerance or evals >= problem.max_iterations:
            break
        if viol > 1e-3:
            mu = min(mu * 4.0, 1e6)

    best = _polish_period(problem, Gait.from_params(x, nj))
    dyn = ExactDynamics(problem.grid)
    outcome, _ = simulate.evaluate_gait(dyn, best, problem.p, steps=problem.report_steps)
    return SolveResult(
        gait=best,
        outcome=outcome,
        converged=bool(kkt < problem.kkt_tolerance),
        iterations=evals,
        kkt_residual=float(kkt),
    )


# ---------------------------------------------------------------------------
# baselines, momentum sweeps, circular-gait analysis

def baseline_momentum(grid: ShapeGrid, direction: str, level: float) -> float:
    """Point gait at the minimum-inertia shape: pure drift velocity."""
    shape = minimum_inertia_shape(grid, direction)
    return simulate.drift_velocity(grid, shape, momentum_vector(direction, level), direction)


def baseline_kinematic(grid: ShapeGrid, direction: str, level: float, zero_gait: Gait,
                       steps: int = simulate.DEFAULT_STEPS) -> float:
    """Zero-momentum optimal gait re-evaluated exactly at momentum level."""
    dyn = ExactDynamics(grid)
    outcome, _ = simulate.evaluate_gait(
        dyn, zero_gait, momentum_vector(direction, level), steps=steps
    )
    return float(outcome.average_velocity[FIBER_INDEX[direction]])


def crossover_momentum(grid: ShapeGrid, direction: str, zero_gait: Gait) -> float:
    """Momentum level where pure drift overtakes the zero-momentum gait."""
    def gap(level):
        return baseline_momentum(grid, direction, level) - baseline_kinematic(
            grid, direction, level, zero_gait, steps=200
        )

    lo, hi = 0.0, 0.05
    while gap(hi) < 0.0 and hi < 1e4:
        lo, hi = hi, hi * 2.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SweepLevel:
    momentum: float
    gait: Gait
    velocity: float
    amplitude: float
    effort: float
    velocity_kinematic: float
    velocity_momentum: float
    converged: bool


@dataclass(frozen=True)
class SweepResult:
    direction: str
    levels: tuple[SweepLevel, ...]
    crossover: float


_ZERO_SEED_RADII = (0.3, 0.8, 1.3)
_TIE_REL = 3e-3


def _evaluated(problem: Problem, gait: Gait) -> SolveResult:
    """Wrap a fixed gait (period re-tuned to bind the bound) as a result."""
    best = _polish_period(problem, gait)
    dyn = ExactDynamics(problem.grid)
    outcome, _ = simulate.evaluate_gait(dyn, best, problem.p, steps=problem.report_steps)
    return SolveResult(gait=best, outcome=outcome, converged=False,
                       iterations=0, kkt_residual=np.inf)


def _pick(candidates, fib, prev_amp=None):
    """Fastest candidate, with a continuity tie-break on the amplitude.

    Near-ties (within a fraction of the best velocity) are resolved toward
    amplitudes not exceeding the previous momentum level's, so flat
    valleys in the objective do not produce spurious amplitude jumps.
    """
    def vel(r):
        return float(r.outcome.average_velocity[fib])

    vmax = max(vel(r) for r in candidates)
    near = [r for r in candidates if vel(r) >= vmax - _TIE_REL * abs(vmax)]
    if prev_amp is not None:
        under = [r for r in near if r.gait.amplitude() <= prev_amp * (1.0 + 1e-9)]
        if under:
            return max(under, key=vel)
    return min(near, key=lambda r: r.gait.amplitude())


def sweep(grid: ShapeGrid, direction: str, momentum_levels=None, n_levels: int = 12,
          solver_overrides: dict | None = None) -> SweepResult:
    """Momentum-level continuation with per-level baselines.

    The zero-momentum solve is multi-started over seed radii.  Each level
    then warm-starts from the previous optimum and from a small gait at
    the minimum-inertia shape, so the discrete kinematic-to-momentum
    switch is not masked by continuation; the previous gait itself (period
    re-tuned) is also kept as a candidate.  A backward pass re-solves each
    level from its successor's optimum, which repairs levels where the
    forward continuation stalled in a poor basin.
    """
    overrides = solver_overrides or {}
    base_problem = Problem(grid=grid, direction=direction, momentum=0.0, **overrides)
    min_shape = minimum_inertia_shape(grid, direction)
    fib = FIBER_INDEX[direction]

    zero_result = max(
        (
            solve(replace(base_problem,
                          initial_gait=Gait.circle(min_shape, r, period=4.0)))
            for r in _ZERO_SEED_RADII
        ),
        key=lambda r: float(r.outcome.average_velocity[fib]),
    )
    zero_gait = zero_result.gait

    cross = crossover_momentum(grid, direction, zero_gait)
    if momentum_levels is None:
        momentum_levels = np.linspace(0.0, 4.0 * cross, n_levels)
    momentum_levels = np.asarray(momentum_levels, dtype=float)

    warm_budget = min(150, base_problem.max_iterations)
    results = []
    prev = zero_result
    for k, level in enumerate(momentum_levels):
        problem = replace(base_problem, momentum=level, max_iterations=warm_budget)
        if level == 0.0:
            results.append(zero_result)
            prev = zero_result
            continue
        candidates = [solve(replace(problem, initial_gait=prev.gait))]
        if prev.gait.amplitude() > 0.01:
            # the collapsed branch: skip once continuation is already there
            seed = Gait.circle(min_shape, 0.05, period=max(prev.gait.period, 1.0))
            candidates.append(solve(replace(problem, initial_gait=seed)))
            candidates.append(_evaluated(problem, prev.gait))
        prev = _pick(candidates, fib, prev_amp=prev.gait.amplitude())
        results.append(prev)

    # backward repair: a level beaten by continuation from above was stuck
    for k in range(len(momentum_levels) - 2, 0, -1):
        level = momentum_levels[k]
        problem = replace(base_problem, momentum=level, max_iterations=warm_budget)
        redo = solve(replace(problem, initial_gait=results[k + 1].gait))
        vel = float(results[k].outcome.average_velocity[fib])
        if float(redo.outcome.average_velocity[fib]) > vel * (1.0 + _TIE_REL):
            results[k] = redo

    levels = []
    for level, res in zip(momentum_levels, results):
        levels.append(
            SweepLevel(
                momentum=float(level),
                gait=res.gait,
                velocity=float(res.outcome.average_velocity[fib]),
                amplitude=res.gait.amplitude(),
                effort=res.outcome.average_effort,
                velocity_kinematic=baseline_kinematic(grid, direction, level, zero_gait),
                velocity_momentum=baseline_momentum(grid, direction, level),
                converged=res.converged,
            )
        )
    return SweepResult(direction=direction, levels=tuple(levels), crossover=cross)


# ---------------------------------------------------------------------------
# circular-gait analysis of the discrete transition

@dataclass(frozen=True)
class CircleSample:
    radius: float
    momentum: float
    period: float
    velocity_total: float
    velocity_kinematic: float
    velocity_momentum: float
    velocity_momentum_normalized: float


def _bind_period(grid, gait_of_T, p, c=EFFORT_BOUND, steps=200):
    """Period at which the average-effort bound is active (bisection)."""
    dyn = GridDynamics(grid)

    def eff(T):
        return simulate.average_effort(dyn, gait_of_T(T), p, steps=steps) - c

    lo, hi = T_MIN, 1.0
    while eff(hi) > 0.0 and hi < 1e4:
        hi *= 2.0
    if eff(lo) < 0.0:
        return lo
    for _ in range(40):
        mid = np.sqrt(lo * hi)
        e = eff(mid)
        if abs(e) < 1e-5 * c:
            return mid
        if e > 0.0:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-9:
            break
    return hi


def circle_sweep(grid: ShapeGrid, radii, momentum_levels, direction: str = "theta",
                 center=None, steps: int = 400):
    """Uniform-pace circular gaits tangent to the minimum-inertia shape.

    For each radius and momentum level the period is set so the effort
    bound binds, and the net rotation is split into the drift (momentum)
    contribution and the kinematic remainder.
    """
    if center is None:
        center = minimum_inertia_shape(grid, direction)
    fib = FIBER_INDEX[direction]
    dyn = GridDynamics(grid)
    out = []
    for level in momentum_levels:
        p = momentum_vector(direction, level)
        for radius in radii:
            if radius == 0.0:
                gait = Gait.point(center, period=1.0)
                vel_m = simulate.drift_velocity(grid, center, p, direction)
                out.append(
                    CircleSample(0.0, float(level), np.inf, vel_m, 0.0, vel_m,
                                 vel_m / level if level else 0.0)
                )
                continue
            ctr = center - radius / np.sqrt(2.0)

            def gait_of_T(T, r=radius, c0=ctr):
                return Gait.circle(c0, r, period=T, phase=np.pi / 4.0)

            T = _bind_period(grid, gait_of_T, p)
            gait = gait_of_T(T)
            traj = simulate.integrate_gait(dyn, gait, p, steps=steps)
            total = (traj.poses[-1, fib] - traj.poses[0, fib]) / T
            mgi = grid.query(traj.shapes, names=("Mgg_inv",))["Mgg_inv"]
            drift_rate = np.einsum(
                "nij,nj->ni", mgi, se2.dual_adjoint_apply_arr(traj.poses, p)
            )[:, fib]
            vel_m = float(np.trapezoid(drift_rate, traj.times) / T)
            out.append(
                CircleSample(
                    radius=float(radius),
                    momentum=float(level),
                    period=float(T),
                    velocity_total=float(total),
                    velocity_kinematic=float(total - vel_m),
                    velocity_momentum=vel_m,
                    velocity_momentum_normalized=vel_m / level if level else 0.0,
                )
            )
    return out
