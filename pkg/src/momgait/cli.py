"""Command-line front end: run-spec parsing, scenario orchestration, and all
CSV/JSON/SVG emission.

Numbers are written with a fixed repr-style format so rerunning a command
with the same inputs reproduces byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from momgait import connection, curvature, linkage, optimize, simulate, svgplot
from momgait.connection import FIBER_INDEX
from momgait.gait import Gait

OUTDIR_ENV = "MOMGAIT_OUTDIR"

_SOLVER_KEYS = {
    "max_iterations",
    "kkt_tolerance",
    "opt_steps",
    "n_waypoints",
    "effort_bound",
}
_SPEC_KEYS = {
    "system",
    "direction",
    "resolution",
    "momentum_levels",
    "solver",
    "output_dir",
    "seed",
}
_LINK_KEYS = {"length", "aspect_ratio", "body_density", "fluid_density"}


class SpecError(ValueError):
    """Run-spec validation failure, reported with the offending field."""


@dataclass
class RunSpec:
    system: object = "swimmer"
    direction: str = "x"
    resolution: int = 64
    momentum_levels: list | None = None
    solver: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0

    def validate(self):
        if isinstance(self.system, str):
            if self.system not in ("swimmer", "snake"):
                raise SpecError(f"system: unknown preset {self.system!r}")
        elif isinstance(self.system, dict):
            links = self.system.get("links")
            if not isinstance(links, list) or not links:
                raise SpecError("system.links: custom model needs a link list")
            extra = set(self.system) - {"links"}
            if extra:
                raise SpecError(f"system: unknown keys {sorted(extra)}")
            for i, lk in enumerate(links):
                bad = set(lk) - _LINK_KEYS
                if bad:
                    raise SpecError(f"system.links[{i}]: unknown keys {sorted(bad)}")
        else:
            raise SpecError("system: expected preset name or model block")
        if self.direction not in FIBER_INDEX:
            raise SpecError(f"direction: expected one of {sorted(FIBER_INDEX)}")
        if not (8 <= int(self.resolution) <= 512):
            raise SpecError("resolution: expected an integer in [8, 512]")
        if self.momentum_levels is not None:
            levels = [float(v) for v in self.momentum_levels]
            if any(b < a for a, b in zip(levels, levels[1:])) or (
                levels and levels[0] < 0.0
            ):
                raise SpecError("momentum_levels: expected ascending values from >= 0")
        bad = set(self.solver) - _SOLVER_KEYS
        if bad:
            raise SpecError(f"solver: unknown keys {sorted(bad)}")
        return self

    @staticmethod
    def from_file(path: str) -> "RunSpec":
        with open(path) as fh:
            obj = json.load(fh)
        if not isinstance(obj, dict):
            raise SpecError("run spec must be a JSON object")
        unknown = set(obj) - _SPEC_KEYS
        if unknown:
            raise SpecError(f"unknown run-spec keys {sorted(unknown)}")
        return RunSpec(**obj).validate()

    def model(self) -> linkage.SystemModel:
        if self.system == "swimmer":
            return linkage.swimmer()
        if self.system == "snake":
            return linkage.snake()
        links = tuple(
            linkage.LinkGeometry(
                length=float(lk["length"]),
                aspect_ratio=float(lk.get("aspect_ratio", 0.1)),
                body_density=float(lk.get("body_density", 1.0)),
                fluid_density=float(lk.get("fluid_density", 1.0)),
            )
            for lk in self.system["links"]
        )
        return linkage.SystemModel(links=links)

    def system_name(self) -> str:
        return self.system if isinstance(self.system, str) else "custom"


def _fmt(v) -> str:
    return format(float(v), ".12g")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(spec: RunSpec, override=None):
    path = override or os.environ.get(OUTDIR_ENV) or spec.output_dir
    os.makedirs(path, exist_ok=True)
    return path


def _spec_from_args(args) -> RunSpec:
    if getattr(args, "spec", None):
        spec = RunSpec.from_file(args.spec)
    else:
        spec = RunSpec()
    if getattr(args, "system", None):
        spec.system = args.system
    if getattr(args, "direction", None):
        spec.direction = args.direction
    if getattr(args, "resolution", None):
        spec.resolution = args.resolution
    return spec.validate()


def _grid(spec: RunSpec):
    return connection.build_grid(spec.model(), n=int(spec.resolution))


def _problem(spec: RunSpec, grid, momentum: float, **extra) -> optimize.Problem:
    kw = dict(spec.solver)
    kw.update(extra)
    return optimize.Problem(
        grid=grid, direction=spec.direction, momentum=momentum, **kw
    )


def _load_gait(path: str) -> Gait:
    with open(path) as fh:
        return Gait.from_json(fh.read())


# ---------------------------------------------------------------------------
# subcommands

def cmd_fields(args) -> int:
    spec = _spec_from_args(args)
    out = _outdir(spec, args.out)
    grid = _grid(spec)
    p = optimize.momentum_vector(spec.direction, args.momentum)
    snap = curvature.ccf_grid_snapshot(grid, p)
    a_field = grid.node_field("A")
    n = grid.n
    rows = []
    for i in range(n):
        for j in range(n):
            rows.append(
                [grid.axis[i], grid.axis[j]]
                + list(a_field[i, j].ravel())
                + list(snap["D12"][i, j])
                + list(snap["D1t"][i, j])
                + list(snap["D2t"][i, j])
            )
    header = (
        ["alpha1", "alpha2"]
        + [f"A_{r}{c}" for r in "xyt" for c in "12"]
        + [f"D12_{c}" for c in "xyt"]
        + [f"D1t_{c}" for c in "xyt"]
        + [f"D2t_{c}" for c in "xyt"]
    )
    _write_csv(os.path.join(out, "fields.csv"), header, rows)

    fib = FIBER_INDEX[spec.direction]
    canvas = svgplot.field_plot(
        grid.axis, grid.axis, snap["D12"][:, :, fib],
        title=f"D12 {spec.direction} component",
    )
    ax = a_field[:, :, fib, :]
    svgplot.arrow_field(grid.axis, grid.axis, ax[:, :, 0], ax[:, :, 1], canvas=canvas)
    with open(os.path.join(out, f"d12_{spec.direction}.svg"), "w") as fh:
        fh.write(canvas.render())
    print(f"wrote fields.csv and d12_{spec.direction}.svg to {out}")
    return 0


def cmd_simulate(args) -> int:
    spec = _spec_from_args(args)
    out = _outdir(spec, args.out)
    grid = _grid(spec)
    gait = _load_gait(args.gait)
    p = optimize.momentum_vector(spec.direction, args.momentum)
    dyn = simulate.ExactDynamics(grid)
    outcome, traj = simulate.evaluate_gait(dyn, gait, p, steps=args.steps)
    rows = np.column_stack(
        [
            traj.times[0],
            traj.shapes[0],
            traj.shape_velocities[0],
            traj.poses[0],
            traj.body_velocities[0],
            traj.forces[0],
        ]
    )
    header = [
        "t", "alpha1", "alpha2", "alpha1_dot", "alpha2_dot",
        "x", "y", "theta", "xi_x", "xi_y", "xi_theta", "u1", "u2",
    ]
    _write_csv(os.path.join(out, "trajectory.csv"), header, rows)
    _write_json(
        os.path.join(out, "summary.json"),
        {
            "displacement": [float(v) for v in outcome.displacement],
            "average_velocity": [float(v) for v in outcome.average_velocity],
            "average_effort": outcome.average_effort,
            "period": outcome.period,
        },
    )
    print(f"wrote trajectory.csv and summary.json to {out}")
    return 0


def _gait_svg(grid, gait, direction, path):
    fib = FIBER_INDEX[direction]
    snap = curvature.ccf_grid_snapshot(grid, np.zeros(3))
    canvas = svgplot.field_plot(grid.axis, grid.axis, snap["D12"][:, :, fib])
    t = np.linspace(0.0, gait.period, 241)[:-1]
    shapes, vels = gait.evaluate(t)
    speeds = np.linalg.norm(vels, axis=1)
    shapes = np.mod(shapes, 2.0 * np.pi)
    svgplot.gait_plot(canvas, shapes, speeds)
    with open(path, "w") as fh:
        fh.write(canvas.render())


def cmd_optimize(args) -> int:
    spec = _spec_from_args(args)
    out = _outdir(spec, args.out)
    grid = _grid(spec)
    extra = {}
    if args.gait:
        extra["initial_gait"] = _load_gait(args.gait)
    problem = _problem(spec, grid, args.momentum, **extra)
    res = optimize.solve(problem)
    with open(os.path.join(out, "gait.json"), "w") as fh:
        fh.write(res.gait.to_json() + "\n")
    _write_json(
        os.path.join(out, "outcome.json"),
        {
            "average_velocity": [float(v) for v in res.outcome.average_velocity],
            "average_effort": res.outcome.average_effort,
            "displacement": [float(v) for v in res.outcome.displacement],
            "period": res.outcome.period,
            "amplitude": res.gait.amplitude(),
            "converged": res.converged,
            "iterations": res.iterations,
            "kkt_residual": res.kkt_residual,
        },
    )
    _gait_svg(grid, res.gait, spec.direction, os.path.join(out, "gait.svg"))
    vel = res.outcome.average_velocity[FIBER_INDEX[spec.direction]]
    print(
        f"optimized {spec.system_name()} {spec.direction} at momentum "
        f"{_fmt(args.momentum)}: velocity {_fmt(vel)}, effort "
        f"{_fmt(res.outcome.average_effort)}"
    )
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    out = _outdir(spec, args.out)
    grid = _grid(spec)
    overrides = dict(spec.solver)
    sw = optimize.sweep(
        grid,
        spec.direction,
        momentum_levels=spec.momentum_levels,
        solver_overrides=overrides,
    )
    header = [
        "level", "velocity_optimal", "velocity_kinematic", "velocity_momentum",
        "amplitude", "effort",
    ]
    rows = [
        [
            lv.momentum, lv.velocity, lv.velocity_kinematic, lv.velocity_momentum,
            lv.amplitude, lv.effort,
        ]
        for lv in sw.levels
    ]
    _write_csv(os.path.join(out, "sweep.csv"), header, rows)
    _write_json(
        os.path.join(out, "sweep.json"),
        {
            "direction": sw.direction,
            "crossover": sw.crossover,
            "levels": [
                {
                    "momentum": lv.momentum,
                    "velocity": lv.velocity,
                    "velocity_kinematic": lv.velocity_kinematic,
                    "velocity_momentum": lv.velocity_momentum,
                    "amplitude": lv.amplitude,
                    "effort": lv.effort,
                    "converged": lv.converged,
                    "gait": json.loads(lv.gait.to_json()),
                }
                for lv in sw.levels
            ],
        },
    )
    for k, lv in enumerate(sw.levels):
        with open(os.path.join(out, f"gait_level_{k:02d}.json"), "w") as fh:
            fh.write(lv.gait.to_json() + "\n")
        _gait_svg(
            grid, lv.gait, spec.direction, os.path.join(out, f"gait_level_{k:02d}.svg")
        )
    print(f"wrote sweep.csv, sweep.json, and {len(sw.levels)} gait files to {out}")
    return 0


def cmd_circle_sweep(args) -> int:
    spec = _spec_from_args(args)
    out = _outdir(spec, args.out)
    grid = _grid(spec)
    radii = np.linspace(0.0, args.max_radius, args.n_radii)
    levels = (
        [float(v) for v in spec.momentum_levels]
        if spec.momentum_levels is not None
        else [float(v) for v in args.levels]
    )
    samples = optimize.circle_sweep(grid, radii, levels, direction=spec.direction)
    header = [
        "radius", "momentum", "period", "velocity_total", "velocity_kinematic",
        "velocity_momentum", "velocity_momentum_normalized",
    ]
    rows = [
        [
            s.radius, s.momentum, s.period, s.velocity_total, s.velocity_kinematic,
            s.velocity_momentum, s.velocity_momentum_normalized,
        ]
        for s in samples
    ]
    _write_csv(os.path.join(out, "circle_sweep.csv"), header, rows)
    print(f"wrote circle_sweep.csv ({len(rows)} rows) to {out}")
    return 0


def cmd_baselines(args) -> int:
    spec = _spec_from_args(args)
    out = _outdir(spec, args.out)
    grid = _grid(spec)
    problem = _problem(spec, grid, 0.0)
    zero = optimize.solve(problem).gait
    cross = optimize.crossover_momentum(grid, spec.direction, zero)
    levels = (
        [float(v) for v in spec.momentum_levels]
        if spec.momentum_levels is not None
        else list(np.linspace(0.0, 4.0 * cross, 12))
    )
    rows = [
        [
            lv,
            optimize.baseline_kinematic(grid, spec.direction, lv, zero),
            optimize.baseline_momentum(grid, spec.direction, lv),
        ]
        for lv in levels
    ]
    _write_csv(
        os.path.join(out, "baselines.csv"),
        ["level", "velocity_kinematic", "velocity_momentum"],
        rows,
    )
    _write_json(os.path.join(out, "crossover.json"), {"crossover": cross})
    print(f"wrote baselines.csv and crossover.json to {out} (crossover {_fmt(cross)})")
    return 0


def cmd_verify(args) -> int:
    """Quick built-in consistency checks; prints one pass/fail line each."""
    checks = []

    grid_snake = connection.build_grid(linkage.snake())
    dyn = simulate.ExactDynamics(grid_snake)
    gait = Gait.point(np.array([1.0, 2.0]), period=10.0)
    drift, _ = simulate.momentum_drift(dyn, gait, np.array([0.0, 0.0, 1.0]), steps=400)
    checks.append(("momentum conservation (fixed shape, 10 s)", drift < 1e-8))

    shape = connection.minimum_inertia_shape(grid_snake, "theta")
    checks.append(
        (
            "snake minimum-inertia shape at (pi, pi)",
            np.max(np.abs(shape - np.pi)) < grid_snake.h,
        )
    )

    grid_sw = connection.build_grid(linkage.swimmer())
    shape = connection.minimum_inertia_shape(grid_sw, "x")
    wrapped = np.minimum(shape, 2.0 * np.pi - shape)
    checks.append(
        ("swimmer minimum-inertia shape at (0, 0)", np.max(wrapped) < grid_sw.h)
    )

    g = Gait.circle(np.zeros(2), 0.2, period=2.0)
    p0 = np.zeros(3)
    dyn_sw = simulate.GridDynamics(grid_sw)
    traj = simulate.integrate_gait(dyn_sw, g, p0, steps=200)
    est = optimize.estimate_displacement(grid_sw, g, p0, trajectory=traj)
    exact = traj.poses[-1] - traj.poses[0]
    rel = abs(est[0] - exact[0]) / abs(exact[0])
    checks.append(("curvature-flux displacement estimate (swimmer)", rel < 0.05))

    ok = True
    for name, passed in checks:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}")
        ok = ok and passed
    return 0 if ok else 2


# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--spec", help="run-spec JSON file")
    sub.add_argument("--system", choices=["swimmer", "snake"])
    sub.add_argument("--direction", choices=sorted(FIBER_INDEX))
    sub.add_argument("--resolution", type=int)
    sub.add_argument("--out", help="output directory (overrides spec and env)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momgait",
        description="Gait analysis and optimization for momentum-carrying "
        "planar chain locomotors",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("fields", help="emit connection and curvature fields")
    _add_common(s)
    s.add_argument("--momentum", type=float, default=0.0)
    s.set_defaults(func=cmd_fields)

    s = subs.add_parser("simulate", help="integrate one gait cycle")
    _add_common(s)
    s.add_argument("--gait", required=True, help="gait JSON file")
    s.add_argument("--momentum", type=float, default=0.0)
    s.add_argument("--steps", type=int, default=simulate.DEFAULT_STEPS)
    s.set_defaults(func=cmd_simulate)

    s = subs.add_parser("optimize", help="solve one constrained gait problem")
    _add_common(s)
    s.add_argument("--momentum", type=float, default=0.0)
    s.add_argument("--gait", help="initial gait JSON file")
    s.set_defaults(func=cmd_optimize)

    s = subs.add_parser("sweep", help="momentum-level continuation sweep")
    _add_common(s)
    s.set_defaults(func=cmd_sweep)

    s = subs.add_parser("circle-sweep", help="circular-gait radius scan")
    _add_common(s)
    s.add_argument("--max-radius", type=float, default=2.0)
    s.add_argument("--n-radii", type=int, default=40)
    s.add_argument("--levels", type=float, nargs="+", default=[0.05, 0.25, 1.0])
    s.set_defaults(func=cmd_circle_sweep)

    s = subs.add_parser("baselines", help="kinematic and momentum baselines")
    _add_common(s)
    s.set_defaults(func=cmd_baselines)

    s = subs.add_parser("verify", help="run built-in consistency checks")
    s.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
