"""Command-line front end.

Subcommands: ``check-potential``, ``solve``, ``sweep`` and ``oracle``.

Exit codes:
    0  every gate passed
    1  a hypothesis check or the sweep verdict failed
    2  configuration or usage error
    3  collision abort in the minimizer, or the collision floor is active
    4  minimizer did not reach its tolerances
    5  orbit checks failed under ``--strict-orbit``

Set ``ORBIT_LOG`` (DEBUG, INFO, WARNING, ...) for log output on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .diagnostics import SweepConfig, continuation_sweep, jsonable
from .dynamics import KeplerHyperbola, circle_orbit, circular_oracle, kepler_radius, kepler_spec, verlet_integrate
from .loop import DEFAULT_NODES, write_loop_csv
from .minimize import CollisionAbort, SolverConfig, minimize_constrained
from .potential import ConfigError, PotentialSpec, check_hypotheses, load_config_mapping, potential_from_mapping
from .rescale import reconstruct_orbit, write_segment
from .seed import SeedError, solve_seed

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_COLLISION, EXIT_NONCONVERGED, EXIT_ORBIT = 0, 1, 2, 3, 4, 5
SCHEMA = 1
ORBIT_ENERGY_GATE = 5e-3

log = logging.getLogger("hyperorbit")


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(jsonable({"schema": SCHEMA, **obj}), indent=2, sort_keys=True) + "\n"


def _load(args):
    cfg = load_config_mapping(args.config)
    if getattr(args, "alpha_override", None) is not None:
        cfg["alpha"] = args.alpha_override
    return cfg, potential_from_mapping(cfg)


def _pick(cli_value, cfg, key, default, kind=float):
    v = cli_value if cli_value is not None else cfg.get(key, default)
    try:
        return kind(v)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {v!r}") from exc


def _direction(cfg, spec: PotentialSpec):
    e = cfg.get("direction")
    if e is None:
        e = np.zeros(spec.dimension)
        e[0] = 1.0
        return e
    e = np.asarray(e, dtype=float)
    if e.shape != (spec.dimension,):
        raise UsageError("direction must have one component per dimension")
    return e / np.linalg.norm(e)


def _solver_config(args, cfg) -> SolverConfig:
    kw = {}
    if args.tol_kkt is not None or "tol_kkt" in cfg:
        kw["tol_kkt"] = _pick(args.tol_kkt, cfg, "tol_kkt", None)
    if args.tol_constraint is not None or "tol_constraint" in cfg:
        kw["tol_constraint"] = _pick(args.tol_constraint, cfg, "tol_constraint", None)
    if getattr(args, "collision_floor", None) is not None or "collision_floor" in cfg:
        kw["collision_floor"] = _pick(getattr(args, "collision_floor", None), cfg, "collision_floor", None)
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _common_run(args, cfg):
    H = _pick(args.H, cfg, "H", 1.0)
    n = _pick(args.n, cfg, "n", DEFAULT_NODES, int)
    if not H > 0:
        raise UsageError("H must be positive")
    if n < 8 or n % 2:
        raise UsageError("n must be even and >= 8")
    bracket = tuple(args.seed_bracket) if args.seed_bracket else tuple(cfg.get("seed_bracket", (1e-3, 1e3)))
    return H, n, bracket


def cmd_check_potential(args) -> int:
    _, spec = _load(args)
    report = check_hypotheses(spec)
    sys.stdout.write(_dump(report.as_dict()))
    for r in report.results:
        if not r.passed:
            print(r.message or f"{r.name} failed", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_solve(args) -> int:
    cfg, spec = _load(args)
    H, n, bracket = _common_run(args, cfg)
    R = _pick(args.R, cfg, "R", 16.0)
    if not R > 0:
        raise UsageError("R must be positive")
    e = _direction(cfg, spec)
    solver = _solver_config(args, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        seed = solve_seed(R, e, H, spec, n, bracket)
    except SeedError as exc:
        raise UsageError(str(exc)) from exc

    code = EXIT_OK
    try:
        loop, report = minimize_constrained(seed, spec, H, solver)
    except CollisionAbort as exc:
        loop, report = exc.loop, exc.report
        code = EXIT_COLLISION
    if code == EXIT_OK and not report.converged:
        code = EXIT_NONCONVERGED
    if code == EXIT_OK and report.floor_active:
        code = EXIT_COLLISION

    write_loop_csv(loop, out / "loop.csv")
    result = {"command": "solve", "R": R, "H": H, "n": n, "spec": spec.as_dict(), "solve": report.as_dict()}
    if code == EXIT_OK:
        seg = reconstruct_orbit(loop, spec, H)
        write_segment(seg, out / "orbit.csv", out / "orbit.json")
        result["orbit"] = seg.metadata()
        if args.strict_orbit and seg.max_interior_energy_residual >= ORBIT_ENERGY_GATE * H:
            print(f"orbit energy residual {seg.max_interior_energy_residual:.3e} above gate", file=sys.stderr)
            code = EXIT_ORBIT
    result["exit_code"] = code
    text = _dump(result)
    (out / "solve_report.json").write_text(text)
    sys.stdout.write(text)
    return code


def cmd_sweep(args) -> int:
    cfg, spec = _load(args)
    H, n, bracket = _common_run(args, cfg)
    R0 = _pick(args.R0, cfg, "R0", 4.0)
    k = _pick(args.doublings, cfg, "doublings", 4, int)
    if not R0 > 0 or k < 3:
        raise UsageError("need R0 > 0 and at least 3 doublings")
    e = _direction(cfg, spec)
    sweep_cfg = SweepConfig(
        n=n, solver=_solver_config(args, cfg), seed_bracket=bracket, jobs=max(1, args.jobs),
        warm_start=args.warm_start, out_dir=args.out,
    )
    record, local, direction = continuation_sweep(spec, H, e, [R0 * 2**i for i in range(k + 1)], sweep_cfg)
    payload = record.as_dict()
    payload["direction_report"] = direction.as_dict() if direction is not None else None
    text = json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out, "sweep.json").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if record.summary.get("verdict") == "PASS" else EXIT_FAIL


def cmd_oracle(args) -> int:
    if args.kind == "kepler":
        try:
            h = KeplerHyperbola(args.m, args.delta, args.L, args.H)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        payload = {
            "kind": "kepler",
            "m": h.mass,
            "delta": h.delta,
            "L": h.angular_momentum,
            "H": h.energy,
            "lenz_magnitude": h.lenz_magnitude,
            "zeta_inf": h.zeta_inf,
            "periapsis": h.periapsis,
            "radius_at_periapsis_angle": kepler_radius(h, 0.0),
            "scattering_angle": math.pi - 2.0 * h.zeta_inf,
        }
        x0, v0 = h.periapsis_state()
        spec = kepler_spec(h)
        tr = verlet_integrate(spec, x0, v0, (0.0, args.t_max), args.dt)
        # the orbit is symmetric about the periapsis axis
        back_x = tr.positions[:0:-1] * np.array([1.0, -1.0])
        back_v = tr.velocities[:0:-1] * np.array([-1.0, 1.0])
        times = np.concatenate([-tr.times[:0:-1], tr.times])
        pos = np.vstack([back_x, tr.positions])
        vel = np.vstack([back_v, tr.velocities])
        resid = 0.5 * np.sum(vel * vel, axis=1) + h.delta / h.mass / np.linalg.norm(pos, axis=1) - h.energy / h.mass
    else:
        try:
            r, w = circular_oracle(args.alpha, args.H)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        payload = {"kind": "circle", "alpha": args.alpha, "H": args.H, "r": r, "omega": w, "period": 2 * math.pi / w}
        times = np.linspace(0.0, 2 * math.pi / w, args.samples)
        pos, vel, _ = circle_orbit(args.alpha, args.H, times)
        resid = 0.5 * np.sum(vel * vel, axis=1) - np.linalg.norm(pos, axis=1) ** (-args.alpha) - args.H
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        cols = "t,x1,x2,v1,v2,energy_residual"
        np.savetxt(out / f"{args.kind}.csv", np.column_stack([times, pos, vel, resid]), delimiter=",",
                   header=cols, comments="", fmt="%.17g")
    sys.stdout.write(_dump(payload))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperorbit", description="Variational hyperbolic orbits for singular repulsive potentials.")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp):
        sp.add_argument("config", help="potential config (key = value, TOML syntax)")
        sp.add_argument("--H", type=float, help="energy level (default from config, else 1)")
        sp.add_argument("--n", type=int, help=f"half-interval nodes (default {DEFAULT_NODES})")
        sp.add_argument("--alpha-override", type=float)
        sp.add_argument("--seed-bracket", type=float, nargs=2, metavar=("LO", "HI"))
        sp.add_argument("--tol-kkt", type=float)
        sp.add_argument("--tol-constraint", type=float)

    sp = sub.add_parser("check-potential", help="check the potential hypotheses")
    sp.add_argument("config")
    sp.add_argument("--alpha-override", type=float)
    sp.set_defaults(func=cmd_check_potential)

    sp = sub.add_parser("solve", help="seed, minimize and rescale one R")
    run_flags(sp)
    sp.add_argument("--R", type=float, help="endpoint radius (default from config, else 16)")
    sp.add_argument("--out", default="out", help="output directory")
    sp.add_argument("--collision-floor", type=float, help="hard lower bound on node radii (default 1e-6 R)")
    sp.add_argument("--strict-orbit", action="store_true", help="also gate on the orbit energy residual")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="continuation sweep over R = R0 * 2^k")
    run_flags(sp)
    sp.add_argument("--R0", type=float)
    sp.add_argument("--doublings", type=int)
    sp.add_argument("--out", default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--warm-start", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("oracle", help="closed-form reference orbits")
    osub = sp.add_subparsers(dest="kind", required=True)
    k = osub.add_parser("kepler")
    k.add_argument("--m", type=float, default=1.0)
    k.add_argument("--delta", type=float, default=1.0)
    k.add_argument("--L", type=float, default=1.0)
    k.add_argument("--H", type=float, default=0.5)
    k.add_argument("--t-max", type=float, default=50.0)
    k.add_argument("--dt", type=float, default=1e-2)
    k.add_argument("--out")
    c = osub.add_parser("circle")
    c.add_argument("--alpha", type=float, default=4.0)
    c.add_argument("--H", type=float, default=1.0)
    c.add_argument("--samples", type=int, default=1000)
    c.add_argument("--out")
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    level = os.environ.get("ORBIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
