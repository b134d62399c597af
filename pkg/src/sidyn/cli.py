"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 integration diverged
(partial output is still written), 3 non-convergence (calibration, Newton, or
an integration that hit its step limit).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analysis import Axis, find_equilibria, sweep
from .calibration import FitSpec, fit
from .check import consistency_report
from .errors import AllDiverged, NonConvergence, SIDynError
from .integrator import integrate, stability_onset
from .io import (MAX_ROWS, read_observations, sweep_svg, trajectory_svg, write_sweep_csv,
                 write_trajectory_csv)
from .model import PARAM_NAMES
from .scenario import PRESET_D_AXES, PRESETS, parse_scenario, scenario_to_dict, serialize_scenario

log = logging.getLogger("sidyn")

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED, EXIT_NONCONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _load_scenario(args):
    if not args.scenario:
        raise UsageError("--scenario <file> is required")
    return parse_scenario(Path(args.scenario).read_bytes(), unchecked_rates=args.unchecked_rates)


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _sum_law_note(p):
    if p.mu1 == p.mu2:
        return f"d(S+I)/dt = {p.k - p.mu1:.6g}*(S+I) holds exactly for any beta1, beta2"
    return f"d(S+I)/dt = {p.k:.6g}*(S+I) - {p.mu1:.6g}*S - {p.mu2:.6g}*I for any beta1, beta2"


def _simulate(sc, out, svg, steps, prefix=""):
    p = sc.params
    traj = integrate(p, sc.x0, sc.t0, sc.t1, sc.solver)
    write_trajectory_csv(out / f"{prefix}trajectory.csv", p, traj, steps)
    if svg:
        title = sc.label + (" (initial state assumed)" if sc.assumed else "")
        (out / f"{prefix}trajectory.svg").write_text(trajectory_svg(traj, title), encoding="utf-8")
    onset = stability_onset(p, traj, sc.solver.step)
    if onset is not None and sc.solver.method == "rk4-fixed":
        print(f"warning: step {sc.solver.step!r} exceeds the RK4 stability bound from t={onset:.6g}; "
              "reduce --step or use rk4-adaptive", file=sys.stderr)
    if traj.status == "diverged":
        print(f"diverged at t={traj.t[-1]:.6g} (|state| >= {sc.solver.blowup_threshold:.3g}); "
              f"{_sum_law_note(p)}", file=sys.stderr)
        return EXIT_DIVERGED
    if traj.status == "step_limit":
        print(f"step limit reached at t={traj.t[-1]:.6g}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def _equilibrium_dict(e):
    return {
        "s": e.point.s,
        "i": e.point.i,
        "residual_norm": e.residual_norm,
        "trace": e.trace,
        "det": e.det,
        "eigenvalues": [[ev.real, ev.imag] for ev in e.eigenvalues],
        "classification": e.classification,
    }


def _sweep(sc, axis1, axis2, out, svg, workers, unchecked, prefix=""):
    smap = sweep(sc, axis1, axis2, workers=workers, unchecked_rates=unchecked)
    write_sweep_csv(out / f"{prefix}sweep.csv", smap)
    if svg:
        (out / f"{prefix}sweep.svg").write_text(sweep_svg(smap, sc.label), encoding="utf-8")
    return EXIT_OK


def cmd_simulate(args):
    return _simulate(_load_scenario(args), _out_dir(args), args.svg, args.steps)


def cmd_equilibria(args):
    sc = _load_scenario(args)
    region = tuple(float(v) for v in args.region.split(":"))
    if len(region) != 4:
        raise UsageError("--region must be s_lo:s_hi:i_lo:i_hi")
    try:
        eqs = find_equilibria(sc.params, region, args.grid)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    report = {"scenario": scenario_to_dict(sc), "equilibria": [_equilibrium_dict(e) for e in eqs]}
    _write_json(_out_dir(args) / "equilibria.json", report)
    for e in eqs:
        print(f"({e.point.s:.6g}, {e.point.i:.6g})  {e.classification}  residual={e.residual_norm:.3g}")
    return EXIT_OK


def cmd_sweep(args):
    sc = _load_scenario(args)
    if not (args.axis1 and args.axis2):
        raise UsageError("sweep needs --axis1 and --axis2 (name:lo:hi:count)")
    return _sweep(sc, Axis.parse(args.axis1), Axis.parse(args.axis2), _out_dir(args), args.svg,
                  args.workers, args.unchecked_rates)


def _kv_list(text, what):
    out = {}
    for item in filter(None, (text or "").split(",")):
        if "=" not in item:
            raise UsageError(f"{what} entries must be name=value, got {item!r}")
        name, value = item.split("=", 1)
        out[name.strip()] = value.strip()
    return out


def cmd_calibrate(args):
    sc = _load_scenario(args)
    if not args.observations:
        raise UsageError("calibrate needs --observations <csv>")
    if not args.free:
        raise UsageError("calibrate needs --free name[,name...]")
    obs = read_observations(args.observations)
    free = tuple(n.strip() for n in args.free.split(",") if n.strip())
    template = sc.params.as_dict()
    frozen = {n: v for n, v in template.items() if n not in free}
    frozen.update({n: float(v) for n, v in _kv_list(args.frozen, "--frozen").items()})
    unknown = set(frozen) - set(PARAM_NAMES)
    if unknown:
        raise UsageError(f"unknown frozen parameters: {sorted(unknown)}")
    guess = {n: template.get(n) for n in free}
    if args.x0_policy == "free":
        guess.update(s0=sc.x0.s, i0=sc.x0.i)
    guess.update({n: float(v) for n, v in _kv_list(args.guess, "--guess").items()})
    bounds = {}
    for n, v in _kv_list(args.bounds, "--bounds").items():
        lo, hi = v.split(":")
        bounds[n] = (float(lo), float(hi))
    spec = FitSpec(free, frozen, guess, bounds, args.x0_policy)
    try:
        res = fit(spec, obs, sc.solver, args.budget, unchecked_rates=args.unchecked_rates)
    except AllDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    report = {
        "params": res.params.as_dict(),
        "x0": {"s": res.x0.s, "i": res.x0.i},
        "residual": res.residual,
        "initial_residual": res.initial_residual,
        "evaluations": res.evaluations,
        "converged": res.converged,
        "stop_reason": res.stop_reason,
        "free": list(free),
        "trace": [[it, r] for it, r in res.trace],
    }
    _write_json(_out_dir(args) / "fit.json", report)
    print(" ".join(f"{n}={getattr(res.params, n)!r}" for n in free if n in PARAM_NAMES)
          + f" residual={res.residual:.6g} evaluations={res.evaluations} converged={res.converged}")
    if not res.converged:
        print("budget exhausted before convergence", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_scenario(args):
    key = args.name.upper()
    if key not in PRESETS:
        raise UsageError(f"unknown preset {args.name!r}; choose from {', '.join(PRESETS)}")
    sc = PRESETS[key]
    out = _out_dir(args)
    prefix = f"scenario_{key}_"
    (out / f"{prefix}scenario.json").write_bytes(serialize_scenario(sc))
    if sc.assumed:
        print(f"note: preset {key} contains assumed values (see {prefix}scenario.json)", file=sys.stderr)
    if key == "D":
        (n1, lo1, hi1, c1), (n2, lo2, hi2, c2) = PRESET_D_AXES
        return _sweep(sc, Axis(n1, lo1, hi1, c1), Axis(n2, lo2, hi2, c2), out, args.svg, args.workers,
                      False, prefix)
    return _simulate(sc, out, args.svg, args.steps, prefix)


def cmd_check(args):
    sys.stdout.write(consistency_report())
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="scenario JSON file")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--svg", action="store_true", help="also write an SVG chart")
    common.add_argument("--steps", type=int, default=MAX_ROWS, help="max CSV rows (uniform thinning)")
    common.add_argument("--unchecked-rates", action="store_true", help="allow mu1, mu2 above 1")
    common.add_argument("--workers", type=int, default=1, help="processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sidyn", description="Solvent/insolvent borrower dynamics")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate a scenario to a trajectory CSV")
    p = sub.add_parser("equilibria", parents=[common], help="find and classify equilibria")
    p.add_argument("--region", default="-1e5:1e5:-1e5:1e5", help="s_lo:s_hi:i_lo:i_hi")
    p.add_argument("--grid", type=int, default=21, help="Newton seeds per axis")
    p = sub.add_parser("sweep", parents=[common], help="two-parameter outcome map")
    p.add_argument("--axis1", help="name:lo:hi:count")
    p.add_argument("--axis2", help="name:lo:hi:count")
    p = sub.add_parser("calibrate", parents=[common], help="fit parameters to observations")
    p.add_argument("--observations", help="CSV with header t,s,i[,w]")
    p.add_argument("--free", help="comma-separated parameters to fit")
    p.add_argument("--frozen", help="name=value,... overriding the scenario's values")
    p.add_argument("--guess", help="name=value,... initial guess (default: scenario values)")
    p.add_argument("--bounds", help="name=lo:hi,... box bounds")
    p.add_argument("--budget", type=int, default=2000, help="max objective evaluations")
    p.add_argument("--x0-policy", choices=("first_observation", "free"), default="first_observation")
    p = sub.add_parser("scenario", parents=[common], help="run a built-in preset (A, B, C, D)")
    p.add_argument("name")
    sub.add_parser("check", parents=[common], help="print the preset consistency report")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
    "scenario": cmd_scenario,
    "check": cmd_check,
}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, SIDynError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
