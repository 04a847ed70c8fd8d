"""Command-line front end.

Exit codes: 0 success, 1 domain error (no violation, unsolvable target
set, or non-equivalence under ``--expect-equivalent``), 2 input error.
``lpcheck`` further separates input problems: 2 unparsable file, 3 invalid
distribution, 4 signaling distribution.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

from . import functionals as fn
from . import ns_algebra as ns
from .lhv import classical_bound, lp_membership
from .prob_core import (
    InvalidDistribution,
    JointDistribution,
    check_no_signaling,
    format_fraction,
    pr_box_qutrit,
)
from .quantum import (
    THETA_VIOLATION_MIN,
    born_distribution,
    i3_optimal,
    k3_optimal,
    max_violation_state,
    maximize_violation,
    optimal_settings,
)
from .robustness import (
    NoViolation,
    evaluate_extended,
    extended_distribution,
    s3_value,
    threshold_report,
)

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT = 0, 1, 2
EXIT_INVALID_DIST, EXIT_SIGNALING = 3, 4

RESIDUAL_TARGETS = (3, 4, 8, 11, 15, 16, 21, 22, 26, 30, 31, 35)
DERIVE_TARGETS = (2, 4, 9, 11, 13, 18, 20, 24, 25, 28, 32, 36)

_EXPANSIONS = {"K3": fn.K3_EXPANSION, "K3p": fn.K3P_EXPANSION, "W3": fn.W3_EXPANSION}


class InputError(Exception):
    pass


def fmt(x) -> str:
    """Six significant digits for floats, exact n/d for rationals."""
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if abs(x) < 1e-12:
        x = 0.0
    return f"{x:.6g}"


def _parse_indices(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise InputError(f"bad index list {text!r}") from None


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _resolve_functional(name: str) -> fn.BellFunctional:
    try:
        return fn.by_name(name)
    except KeyError:
        pass
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if os.path.isfile(name):
        try:
            with open(name) as fh:
                return fn.BellFunctional.from_json(fh.read())
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read functional from {name}: {exc}") from None
    raise InputError(f"unknown functional {name!r} (not a built-in name or JSON file)")


def _joint_only(f: fn.BellFunctional) -> fn.BellFunctional:
    if f.is_joint_only:
        return f
    return fn.expand_marginals(f, _EXPANSIONS.get(f.name))


# -- subcommands ----------------------------------------------------------


def cmd_derive(args, out) -> int:
    targets = _parse_indices(args.targets)
    try:
        solved = ns.solve_for(ns.build_constraints(), targets)
    except ns.UnsolvableSelection as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        raise InputError(str(exc)) from None
    only = _parse_indices(args.only) if args.only else sorted(solved)
    missing = [k for k in only if k not in solved]
    if missing:
        raise InputError(f"--only lists non-targets: {missing}")
    if args.format == "json":
        json.dump([solved[k].to_json_obj(k) for k in only], out, indent=2)
        out.write("\n")
    else:
        for k in only:
            out.write(solved[k].render(k) + "\n")
    return EXIT_OK


def _relation_text(f: str, g: str, a: Fraction, b: Fraction) -> str:
    rhs = []
    if b != 0:
        rhs.append(format_fraction(b))
    term = g if a == 1 else f"{format_fraction(abs(a))}·{g}"
    if not rhs:
        rhs.append(term if a > 0 else f"-{term}")
    else:
        rhs.append(f"+ {term}" if a > 0 else f"- {term}")
    return f"{f} = {' '.join(rhs)} (modulo no-signaling)"


def cmd_equivalence(args, out) -> int:
    f = _resolve_functional(args.f)
    g = _resolve_functional(args.g)
    fj, gj = _joint_only(f), _joint_only(g)
    targets = _parse_indices(args.targets) if args.targets else list(RESIDUAL_TARGETS)
    rel = ns.affine_relation(fj, gj)
    result = {"f": f.name, "g": g.name, "equivalent": rel is not None}
    if rel is not None:
        a, b = rel
        result.update(scale=format_fraction(a), offset=format_fraction(b))
        text = _relation_text(f.name, g.name, a, b)
    else:
        scale, offset = ns.relation_candidate(fj, gj)
        try:
            res = ns.residual(gj, fj, scale, offset, targets)
        except ns.UnsolvableSelection as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        except ValueError as exc:
            raise InputError(str(exc)) from None
        result.update(
            candidate_scale=format_fraction(scale),
            candidate_offset=format_fraction(offset),
            targets=sorted(targets),
            residual=res.to_json_obj(),
        )
        text = "\n".join([
            f"{f.name} and {g.name}: NOT EQUIVALENT (modulo no-signaling)",
            "candidate: " + _relation_text(g.name, f.name, scale, offset).replace(
                " (modulo no-signaling)", ""),
            "eliminated: " + ",".join(str(t) for t in sorted(targets)),
            f"residual: {res.render()}",
        ])
    if args.format == "json":
        json.dump(result, out, indent=2)
        out.write("\n")
    else:
        out.write(text + "\n")
    if rel is None and args.expect_equivalent:
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_bounds(args, out) -> int:
    if args.family == "cglmp":
        funcs = [fn.cglmp_functional(c) for c in fn.enumerate_cglmp()]
    elif args.family == "wfamily":
        funcs = [fn.w_family_functional(w) for w in fn.enumerate_w_family()]
    else:
        funcs = [fn.by_name(n) for n in ("I3", "K3", "W3", "K3p", "I3p")]
    w = _writer(out)
    w.writerow(["name", "classical_bound", "n_maximizers"])
    for f in funcs:
        best, argmax = classical_bound(f)
        w.writerow([f.name, fmt(best), len(argmax)])
    return EXIT_OK


def _angle_grid(lo: float, hi: float, step: float) -> list[float]:
    if step <= 0:
        raise InputError("--step must be positive")
    if hi < lo:
        raise InputError("--theta-max must not be below --theta-min")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [lo + k * step for k in range(n + 1)]


def cmd_scan(args, out) -> int:
    to_rad = (lambda x: x) if args.radians else math.radians
    w = _writer(out)
    w.writerow(["theta_deg", "I3", "K3", "relation"])
    for t in _angle_grid(args.theta_min, args.theta_max, args.step):
        theta = to_rad(t)
        i3, k3 = i3_optimal(theta), k3_optimal(theta)
        w.writerow([fmt(math.degrees(theta)), fmt(i3), fmt(k3), fmt(i3 - 2 - 3 * k3)])
    return EXIT_OK


def cmd_thresholds(args, out) -> int:
    w = _writer(out)
    if args.mode == "eta_curve":
        step = args.step if args.step is not None else 0.5
        step_rad = step if args.radians else math.radians(step)
        w.writerow(["theta_deg", "I3", "K3", "lambda_min", "eta_ch", "eta_chsh"])
        n = 1
        while n * step_rad < math.pi / 2 - 1e-12:
            theta = n * step_rad
            n += 1
            if theta <= THETA_VIOLATION_MIN:
                continue
            r = threshold_report(theta)
            w.writerow([fmt(math.degrees(theta)), fmt(r.i3), fmt(r.k3),
                        fmt(r.lambda_min), fmt(r.eta_ch), fmt(r.eta_chsh)])
    elif args.mode == "eta_scan_fig2":
        step = args.step if args.step is not None else 0.01
        if step <= 0:
            raise InputError("--step must be positive")
        dist = born_distribution(max_violation_state(), optimal_settings())
        i3f, k3f = fn.i3_functional(), fn.k3_functional()
        w.writerow(["eta", "I3_eta", "K3_eta", "S3"])
        n = int(math.floor(1 / step + 1e-9))
        for k in range(n + 1):
            eta = min(k * step, 1.0)
            ext = extended_distribution(dist, eta)
            w.writerow([fmt(eta), fmt(evaluate_extended(i3f, ext)),
                        fmt(evaluate_extended(k3f, ext)), fmt(s3_value(ext))])
    else:
        best = maximize_violation("optimal_settings")
        r = threshold_report(best.theta)
        rows = [
            ("theta_max_deg", math.degrees(best.theta)),
            ("I3_max", best.i3),
            ("K3_max", r.k3),
            ("lambda_min", r.lambda_min),
            ("noise_tolerance", 1 - r.lambda_min),
            ("eta_ch", r.eta_ch),
            ("eta_chsh", r.eta_chsh),
        ]
        if args.format == "json":
            json.dump({k: v for k, v in rows}, out, indent=2)
            out.write("\n")
        else:
            w.writerow(["quantity", "value"])
            for k, v in rows:
                w.writerow([k, fmt(v)])
    return EXIT_OK


def cmd_prbox(args, out) -> int:
    box = pr_box_qutrit()
    if args.check:
        i3 = fn.evaluate(fn.i3_functional(), box)
        ns_ok = check_no_signaling(box).passed
        exact = ns.build_constraints().satisfied_by(box)
        local = lp_membership(box).local
        out.write(f"I3 = {fmt(i3)}\n")
        out.write(f"constraints satisfied exactly: {'yes' if exact and ns_ok else 'no'}\n")
        out.write(f"verdict: {'local' if local else 'nonlocal'}\n")
    else:
        out.write(box.to_json(indent=2) + "\n")
    return EXIT_OK


def cmd_lpcheck(args, out) -> int:
    try:
        with open(args.dist_file) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot parse {args.dist_file}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        dist = JointDistribution.from_json_obj(obj)
    except (InvalidDistribution, TypeError, ValueError) as exc:
        print(f"error: invalid distribution: {exc}", file=sys.stderr)
        return EXIT_INVALID_DIST
    report = check_no_signaling(dist, args.tol)
    if not report.passed:
        print(f"error: distribution signals (worst mismatch {fmt(report.worst)})",
              file=sys.stderr)
        return EXIT_SIGNALING
    try:
        result = lp_membership(dist, args.tol)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    out.write(f"verdict: {'local' if result.local else 'nonlocal'}\n")
    if result.local and args.weights:
        w = _writer(out)
        w.writerow(["a1", "a2", "b1", "b2", "weight"])
        for s, wt in result.weights.items():
            w.writerow([*s, fmt(wt)])
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qutrit-bell",
        description="CH/CHSH inequalities for two qutrits: algebra, bounds, "
                    "quantum violations and thresholds.",
    )
    p.add_argument("-o", "--output", default="-", help="output file (default stdout)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("derive", help="solve the constraints for 12 target probabilities")
    s.add_argument("--targets", default=",".join(map(str, DERIVE_TARGETS)),
                   help="12 comma-separated flat indices")
    s.add_argument("--only", help="print only these targets")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_derive)

    s = sub.add_parser("equivalence", help="test f = a*g + b modulo no-signaling")
    s.add_argument("f")
    s.add_argument("g")
    s.add_argument("--targets", help="elimination set for the residual report")
    s.add_argument("--expect-equivalent", action="store_true",
                   help="exit 1 if the functionals are not equivalent")
    s.add_argument("--format", choices=("text", "json"), default="text")
    s.set_defaults(func=cmd_equivalence)

    s = sub.add_parser("bounds", help="classical bounds by brute force")
    s.add_argument("--family", choices=("cglmp", "wfamily", "named"), default="named")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("scan", help="I3 and K3 of the state family under optimal phases")
    s.add_argument("--theta-min", type=float, default=0.0)
    s.add_argument("--theta-max", type=float, default=180.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--radians", action="store_true", help="read angles as radians")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("thresholds", help="noise and detector-efficiency thresholds")
    s.add_argument("--mode", choices=("eta_curve", "eta_scan_fig2", "optimum"),
                   default="optimum")
    s.add_argument("--step", type=float,
                   help="theta step (eta_curve, degrees) or eta step (eta_scan_fig2)")
    s.add_argument("--radians", action="store_true")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_thresholds)

    s = sub.add_parser("prbox", help="emit the maximal no-signaling box")
    s.add_argument("--check", action="store_true", help="print I3, constraints and verdict")
    s.set_defaults(func=cmd_prbox)

    s = sub.add_parser("lpcheck", help="decide membership in the local polytope")
    s.add_argument("dist_file")
    s.add_argument("--weights", action="store_true", help="dump mixture weights if local")
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_lpcheck)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout if args.output == "-" else open(args.output, "w")
    try:
        return args.func(args, out)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NoViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
