"""``btwist`` command-line front end.

Every subcommand reads a profile JSON, prints a JSON summary on stdout and,
where a table is produced, writes CSV/JSON artifacts into ``--out``.
Exit status: 0 success, 2 invariant violation, 1 usage or other domain error.
"""
import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import billiard, converse_kam, genfunc, io, twist_map, variational
from ._accel import thread_cap
from .errors import BTwistError, InvariantViolation, OutOfStrip
from .genfunc import GeneratingFunction, StripSpec
from .profile import DEFAULT_EPSILON, RadiusProfile, classify


class UsageError(Exception):
    def __init__(self, message, printed=False):
        super().__init__(message)
        self.printed = printed


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        sys.stderr.write(f"\nerror: {message}\n")
        raise UsageError(message, printed=True)


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _strip(args, gf_sigma=None):
    if args.tau_min is None and args.tau_max is None:
        return None
    return StripSpec(args.tau_min or 0.0, args.tau_max if args.tau_max is not None else gf_sigma)


def _gf(args, profile):
    base = GeneratingFunction(profile, args.c, epsilon=args.epsilon)
    strip = _strip(args, base.sigma)
    return base if strip is None else GeneratingFunction(profile, args.c, strip, args.epsilon)


def cmd_classify(args, profile):
    report = classify(profile, args.epsilon, args.grid or 4096, args.critical_point_mode)
    if args.out_file:
        io.write_json(_out_path(args, "classify.json"), report)
    return report


def cmd_twist_check(args, profile):
    gf = _gf(args, profile)
    strip = gf.strip
    if math.isinf(strip.tau_max):
        raise UsageError("an infinite strip needs --tau-max")
    return genfunc.verify_twist(gf, args.grid or 256, strip)


def cmd_convergence(args, profile):
    if args.tau_max is None:
        raise UsageError("convergence needs --tau-max")
    strip = StripSpec(args.tau_min or 0.0, args.tau_max)
    c_values = args.c_values or [1e-2, 1e-3, 1e-4, 1e-5]
    report = genfunc.convergence_probe(profile, strip, c_values, args.grid or 64, args.epsilon)
    io.write_json(_out_path(args, "convergence.json"), report)
    return report


def cmd_orbit(args, profile):
    gf = _gf(args, profile)
    orbit = twist_map.iterate_orbit(gf, twist_map.CylinderState(args.t, args.K), args.n)
    io.write_csv(_out_path(args, "orbit.csv"), ["n", "t_lift", "t_mod1", "K", "tau", "del_residual"], orbit.rows())
    res = orbit.del_residuals
    return {
        "steps": len(orbit.taus),
        "stopped_early": orbit.stopped_early,
        "failure_index": orbit.failure_index,
        "failure": orbit.failure,
        "sigma_star": twist_map.sigma_star(gf),
        "max_del_residual": float(max(res)) if len(res) else 0.0,
        "rotation_number": variational.rotation_number(orbit) if len(orbit.taus) >= 100 else None,
    }


def _cross(trajectory, profile, c, epsilon):
    try:
        gf = GeneratingFunction(profile, abs(c), epsilon=epsilon)
        return billiard.cross_check(trajectory.events, gf), None
    except (OutOfStrip, BTwistError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def cmd_simulate(args, profile):
    if args.ensemble:
        return _simulate_ensemble(args, profile)
    init = billiard.ParticleState.from_polar(args.r, args.theta, args.vr, args.vtheta, args.t0)
    traj = billiard.simulate(profile, init, args.bounces)
    header = ["n", "time", "angle", "vr_in", "vr_out", "c", "energy_in", "energy_out"]
    io.write_csv(_out_path(args, "events.csv"), header, traj.rows())
    c = init.angular_momentum
    residual, why = _cross(traj, profile, c, args.epsilon)
    cs = np.array([e.angular_momentum for e in traj.events]) if traj.events else np.array([c])
    return {
        "bounces": len(traj.events),
        "impact_times": traj.times,
        "grazed": traj.grazed,
        "failure": traj.failure,
        "angular_momentum": c,
        "angular_momentum_drift": float(np.max(np.abs(cs - c)) / abs(c)) if c != 0 else float(np.max(np.abs(cs))),
        "max_del_residual": residual,
        "cross_check_error": why,
    }


def _simulate_ensemble(args, profile):
    c_max = classify(profile, args.epsilon, 256).c_max
    seeds = np.random.SeedSequence(args.seed).spawn(args.ensemble)

    def run(ss):
        rng = np.random.default_rng(ss)
        c = float(rng.uniform(0.0, c_max)) or c_max / 2
        traj = billiard.simulate(profile, billiard.random_trajectory_start(profile, c, rng), args.bounces)
        residual, why = _cross(traj, profile, c, args.epsilon)
        cs = np.array([e.angular_momentum for e in traj.events])
        return [c, len(traj.events), residual, why, float(np.max(np.abs(cs - c)) / c)]

    with ThreadPoolExecutor(max_workers=thread_cap()) as pool:
        rows = list(pool.map(run, seeds))
    io.write_csv(_out_path(args, "ensemble.csv"), ["c", "bounces", "max_del_residual", "error", "c_drift"], rows)
    residuals = [r[2] for r in rows if r[2] is not None]
    return {
        "trajectories": len(rows),
        "max_del_residual": max(residuals) if residuals else None,
        "max_angular_momentum_drift": max(r[4] for r in rows),
        "failed_cross_checks": sum(r[2] is None for r in rows),
    }


def cmd_minimize(args, profile):
    gf = _gf(args, profile)
    cfg = variational.minimize_periodic(gf, args.p, args.q, t0=args.t0, tol=args.tol or variational.DEL_TOL)
    io.write_csv(_out_path(args, "configuration.csv"), ["n", "t_lift", "t_mod1", "gap", "del_residual"], cfg.rows())
    return cfg


def cmd_mather_probe(args, profile):
    gf = _gf(args, profile)
    probe = variational.mather_probe(gf, args.omega, args.depth)
    io.write_json(_out_path(args, "mather_probe.json"), probe)
    return probe


def cmd_criterion_scan(args, profile):
    scan = converse_kam.criterion_scan(profile, args.epsilon, args.grid or 4096, args.mode, args.critical_point_mode)
    io.write_csv(_out_path(args, "scan.csv"), converse_kam.SCAN_HEADER, scan.rows())
    io.write_json(_out_path(args, "verdict.json"), scan.verdict)
    return scan.verdict


def cmd_bound_check(args, profile):
    gf = _gf(args, profile)
    if args.p is not None:
        cfg = variational.minimize_periodic(gf, args.p, args.q)
        graph = converse_kam.graph_from_configuration(cfg)
    else:
        graph = converse_kam.rigid_rotation_graph(args.tau0, args.grid or 64)
    graph = converse_kam.ab_along_graph(gf, graph)
    return converse_kam.mather_bound_check(graph, capped=not args.uncapped)


COMMANDS = {
    "classify": cmd_classify,
    "twist-check": cmd_twist_check,
    "convergence": cmd_convergence,
    "orbit": cmd_orbit,
    "simulate": cmd_simulate,
    "minimize": cmd_minimize,
    "mather-probe": cmd_mather_probe,
    "criterion-scan": cmd_criterion_scan,
    "bound-check": cmd_bound_check,
}


def _positive(kind):
    def parse(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{s} must be > 0")
        return v
    return parse


def _nonneg(s):
    v = float(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{s} must be >= 0")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("profile", help="profile JSON {\"mean\": .., \"harmonics\": [[a, b], ..]}")
    common.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="sigma_B parameter in (0, 1)")
    common.add_argument("--c", type=_nonneg, default=0.0, help="angular momentum (0 selects the Fermi-Ulam function)")
    common.add_argument("--grid", type=_positive(int), default=None, help="grid size (per-command default)")
    common.add_argument("--tol", type=_positive(float), default=None, help="residual tolerance")
    common.add_argument("--out", default=".", help="directory for CSV/JSON artifacts")
    common.add_argument("--seed", type=int, default=0, help="seed for random sampling")
    common.add_argument("--tau-min", type=_nonneg, default=None)
    common.add_argument("--tau-max", type=_positive(float), default=None)

    parser = _Parser(prog="btwist", description="Breathing-circle billiard twist maps and converse-KAM tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", parents=[common], help="class membership report")
    p.add_argument("--critical-point-mode", action="store_true")
    p.add_argument("--out-file", action="store_true", help="also write classify.json into --out")

    sub.add_parser("twist-check", parents=[common], help="min of -d12 over a strip grid")

    p = sub.add_parser("convergence", parents=[common], help="h_c -> h_0 distance versus c")
    p.add_argument("--c-values", type=_positive(float), nargs="+")

    p = sub.add_parser("orbit", parents=[common], help="iterate the implicit map")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--n", type=_positive(int), default=100)

    p = sub.add_parser("simulate", parents=[common], help="event-driven billiard run")
    p.add_argument("--r", type=_positive(float))
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--vr", type=float, default=0.0)
    p.add_argument("--vtheta", type=float, default=0.0)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--bounces", type=_positive(int), default=10)
    p.add_argument("--ensemble", type=_positive(int), default=None,
                   help="run this many random trajectories (seeded) instead of one")

    p = sub.add_parser("minimize", parents=[common], help="periodic Aubry-Mather configuration")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=_positive(int), required=True)
    p.add_argument("--t0", type=float, default=0.0)

    p = sub.add_parser("mather-probe", parents=[common], help="hull gaps through convergents")
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--depth", type=_positive(int), default=6)

    p = sub.add_parser("criterion-scan", parents=[common], help="A_low/A_up/F scan and verdicts")
    p.add_argument("--mode", choices=["billiard", "fermi_ulam"], default="billiard")
    p.add_argument("--critical-point-mode", action="store_true")

    p = sub.add_parser("bound-check", parents=[common], help="Mather-type inequality along a graph")
    p.add_argument("--tau0", type=_positive(float), default=2.0, help="rigid rotation graph phi(x) = x + tau0")
    p.add_argument("--p", type=int, default=None, help="use the (p, q) minimizer graph instead")
    p.add_argument("--q", type=_positive(int), default=None)
    p.add_argument("--uncapped", action="store_true")
    parser.commands = sub.choices
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate" and not args.ensemble and args.r is None:
            parser.commands["simulate"].error("simulate needs --r (or --ensemble)")
        if args.command == "bound-check" and (args.p is None) != (args.q is None):
            parser.commands["bound-check"].error("bound-check needs both --p and --q")
        profile = RadiusProfile.load(args.profile)
        result = COMMANDS[args.command](args, profile)
    except UsageError as exc:
        if not exc.printed:
            sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except InvariantViolation as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 2
    except (BTwistError, ValueError, OSError, KeyError) as exc:
        sys.stderr.write(f"{type(exc).__name__}: {exc}\n")
        return 1
    sys.stdout.write(io.dumps(result))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
