"""Command-line front end: ``dobbench {simulate,design,sweep,verify}``.

Exit codes: 0 ok, 1 configuration error, 2 divergence, 3 infeasible design,
4 guarantee violated.
"""
import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import output
from .bounds import default_s_bar, design_tau
from .closedloop import make_layout
from .errors import ConfigError, NumericalError
from .scenario import load
from .sim import integrate, report, sweep_tau
from .verify import verify_design

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_INFEASIBLE, EXIT_VIOLATION = 0, 1, 2, 3, 4


def _kappa_pair(text):
    name, _, value = text.partition("=")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="dobbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_help):
        sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--out", help=out_help)
        sp.add_argument("--seed", type=int, help="override the seed of the sim and design sections")

    def design_flags(sp):
        sp.add_argument("--settle-eig", choices=("s", "f"), help="eigenvalue used in the fast settle-time bound")
        sp.add_argument("--mu", type=float, help="override design.mu")
        sp.add_argument("--mu-fraction", type=float,
                        help="set mu to this fraction of the affordable noise level")
        sp.add_argument("--kappa-scale", type=_kappa_pair, action="append", default=[],
                        metavar="NAME=FACTOR", help="multiply an estimated kappa (repeatable)")

    sp = sub.add_parser("simulate", help="simulate the closed loop and write a trajectory CSV")
    common(sp, "trajectory CSV (a .report.json is written next to it)")
    sp.add_argument("--tau", type=float, help="override qfilter.tau")

    sp = sub.add_parser("design", help="compute the affordable noise level and tau interval")
    common(sp, "design JSON")
    design_flags(sp)

    sp = sub.add_parser("sweep", help="simulate a log-spaced tau grid")
    common(sp, "sweep CSV (a .meta.json is written next to it)")
    sp.add_argument("--tau-min", type=float, required=True)
    sp.add_argument("--tau-max", type=float, required=True)
    sp.add_argument("--points", type=int, default=15)

    sp = sub.add_parser("verify", help="design tau and check the guarantee by simulation")
    common(sp, "verdict JSON")
    design_flags(sp)
    sp.add_argument("--probes", type=int, default=5)
    return p


def _sibling(path, suffix):
    path = Path(path)
    return path.with_name(path.stem + suffix)


def _load(args):
    sf = load(args.scenario)
    if args.seed is not None:
        sf.sim = replace(sf.sim, seed=args.seed)
        if sf.design is not None:
            sf.design = replace(sf.design, seed=args.seed)
    return sf


def _design(sf, args):
    if sf.design is None:
        raise ConfigError("/design: section is required for this command")
    spec = sf.design
    if args.settle_eig:
        spec = replace(spec, settle_eig=args.settle_eig)
    if args.kappa_scale:
        spec = replace(spec, kappa_scale={**spec.kappa_scale, **dict(args.kappa_scale)})
    if args.mu is not None:
        spec = spec.with_mu(args.mu)
    if args.mu_fraction is not None:
        ref = design_tau(sf.scenario, sf.qfilter, spec.with_mu(0.0))
        spec = spec.with_mu(args.mu_fraction * ref.mu_star)
    return spec, design_tau(sf.scenario, sf.qfilter, spec)


def _s_bar(sf, q):
    if q.s_bar is not None:
        return q.s_bar
    spec = sf.design.with_mu(sf.sim.mu) if sf.design else None
    return default_s_bar(sf.scenario, q, spec, mu=sf.sim.mu)


def cmd_simulate(args):
    sf = _load(args)
    q = sf.qfilter if args.tau is None else sf.qfilter.with_tau(args.tau)
    eps = (sf.design.eps_T, sf.design.eps_U) if sf.design else (None, None)
    traj = integrate(sf.scenario, q, sf.sim, s_bar=_s_bar(sf, q))
    rep = report(traj, *eps)
    if args.out:
        output.write_trajectory(args.out, traj, make_layout(sf.scenario, q))
        output.write_json(_sibling(args.out, ".report.json"), rep)
    print(output.to_json(rep))
    if traj.diverged:
        print("simulation diverged; trajectory is partial", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_design(args):
    sf = _load(args)
    _, res = _design(sf, args)
    text = output.to_json(res.to_dict())
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    if not res.feasible:
        print(f"infeasible: binding constraint {res.binding}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args):
    sf = _load(args)
    if not (0 < args.tau_min < args.tau_max) or args.points < 2:
        raise ConfigError("need 0 < --tau-min < --tau-max and --points >= 2")
    taus = np.geomspace(args.tau_min, args.tau_max, args.points)
    eps = (sf.design.eps_T, sf.design.eps_U) if sf.design else (None, None)
    reps = sweep_tau(sf.scenario, sf.qfilter, sf.sim, taus, s_bar=_s_bar(sf, sf.qfilter),
                     eps_T=eps[0], eps_U=eps[1])
    meta = {"seed": sf.sim.seed, "noise": sf.sim.noise, "mu": sf.sim.mu, "period": sf.sim.period,
            "horizon": sf.sim.horizon, "step": sf.sim.step, "taus": taus, "seeds": [sf.sim.seed] * len(taus)}
    if args.out:
        output.write_sweep(args.out, reps)
        output.write_json(_sibling(args.out, ".meta.json"), meta)
    print(output.to_json({"meta": meta, "reports": reps}))
    return EXIT_DIVERGED if any(r.diverged for r in reps) else EXIT_OK


def cmd_verify(args):
    sf = _load(args)
    _, res = _design(sf, args)
    if not res.feasible:
        print(output.to_json({"design": res.to_dict()}))
        print(f"infeasible: binding constraint {res.binding}", file=sys.stderr)
        return EXIT_INFEASIBLE
    verdict = verify_design(res, sf.scenario, sf.qfilter, sf.sim, n_probe=args.probes)
    notes = list(verdict.notes)
    if res.tau_lower == 0:
        notes.append("noise-free design: tau_lower = 0, probes start at 1e-3 of tau_upper")
    doc = {"design": res.to_dict(), "verdict": verdict, "notes": notes}
    text = output.to_json(doc)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    if not verdict.passed:
        bad = [p for p in verdict.probes if not p.passed]
        for p in bad:
            print(f"probe tau={p.tau:.6g} failed: margin_T={p.margin_T:.3g}, margin_U={p.margin_U:.3g}",
                  file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "design": cmd_design, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
