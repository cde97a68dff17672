"""Command-line surface.

Subcommands: ``entropy`` (evaluate a quantity on a state file), ``verify``
(seeded property suites), ``eat-bound`` (accumulation bound from a config
file), ``qkd-rate`` and ``fqrac`` (application calculators).

Exit codes: 0 success, 1 verification violation, 2 parse error,
3 precondition/range violation.  ``--json-style`` switches the report to a
nested key/value document with numbers rendered as decimal strings with 12
significant digits.
"""

from __future__ import annotations

import argparse
import json
import sys

from .accumulation import (
    EATParams,
    aep_bound,
    eat_alpha_star,
    eat_c,
    eat_max_bound,
    eat_min_bound,
    eat_v,
    load_eat_config,
)
from .applications import FQRACParams, QKDParams, fqrac_bound, qkd_asymptotic_threshold, qkd_finite_key_length
from .entropy import EntropyResult, h_alpha, h_alpha_up, von_neumann_conditional
from .smooth import DimensionCapError, h_max_smooth, h_min_smooth
from .stateio import StateFormatError, parse_state
from .verify import ALL_SUITES

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3


def _fmt(value) -> str:
    return format(float(value), ".12g")


def _emit(report: dict, json_style: bool) -> None:
    if json_style:
        def render(node):
            if isinstance(node, dict):
                return {k: render(v) for k, v in node.items()}
            if isinstance(node, (int, float)):
                return _fmt(node)
            return node

        print(json.dumps(render(report), indent=1))
    else:
        def walk(node, prefix=""):
            for k, v in node.items():
                if isinstance(v, dict):
                    walk(v, prefix + k + ".")
                elif isinstance(v, (int, float)):
                    print(f"{prefix}{k}: {_fmt(v)}")
                else:
                    print(f"{prefix}{k}: {v}")

        walk(report)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_entropy(args) -> int:
    try:
        with open(args.state) as fh:
            state = parse_state(fh.read())
    except (OSError, StateFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    cond = [c for c in (args.cond.split(",") if args.cond else []) if c]
    try:
        if args.quantity == "von_neumann":
            result = EntropyResult(von_neumann_conditional(state, cond), "eigensolve", 0.0)
        elif args.quantity == "h_alpha":
            result = EntropyResult(h_alpha(state, cond, args.alpha), "eigensolve", 0.0)
        elif args.quantity == "h_alpha_up":
            result = h_alpha_up(state, cond, args.alpha)
        elif args.quantity == "h_min_smooth":
            result = h_min_smooth(state, cond, args.epsilon)
        elif args.quantity == "h_max_smooth":
            result = h_max_smooth(state, cond, args.epsilon)
        else:  # pragma: no cover - argparse restricts choices
            raise ValueError(args.quantity)
    except (ValueError, DimensionCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    _emit(
        {
            "quantity": args.quantity,
            "value": result.value,
            "method": result.method,
            "certified_gap": result.certified_gap,
        },
        args.json_style,
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    names = list(ALL_SUITES) if args.suite == "all" else [args.suite]
    all_passed = True
    report: dict = {}
    for name in names:
        suite = ALL_SUITES[name](seed=args.seed, trials=args.trials)
        entry = {
            "passed": str(suite.passed),
            "worst": {k: suite.entries[k] for k in sorted(suite.entries)},
        }
        report[name] = entry
        all_passed = all_passed and suite.passed
        if not suite.passed:
            entry["reproduce"] = f"eatkit verify --suite {name} --seed {args.seed} --trials {args.trials}"
    _emit(report, args.json_style)
    return EXIT_OK if all_passed else EXIT_VIOLATION


def _cmd_eat_bound(args) -> int:
    try:
        with open(args.config) as fh:
            params, tradeoff = load_eat_config(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        overrides = {
            "n": args.n, "epsilon": args.epsilon, "p_omega": args.p_omega, "d_a": args.d_a,
        }
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if overrides:
            params = EATParams(**{**params.__dict__, **overrides})
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    try:
        bound = eat_min_bound(params, tradeoff) if tradeoff.kind == "min" else eat_max_bound(params, tradeoff)
        alpha = eat_alpha_star(params, tradeoff)
        report = {
            "kind": tradeoff.kind,
            "bound": bound.value,
            "n": params.n,
            "h": params.h,
            "v": eat_v(tradeoff, params.d_a),
            "c": eat_c(tradeoff, params),
            "alpha_star": alpha.value,
        }
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    if bound.vacuous or alpha.vacuous:
        report["warning"] = "bound is vacuous at these parameters"
    _emit(report, args.json_style)
    return EXIT_OK


def _cmd_qkd_rate(args) -> int:
    try:
        threshold = qkd_asymptotic_threshold(args.e, args.theta_ec, args.mu)
        report = {"threshold": threshold}
        if not args.asymptotic:
            params = QKDParams(n=args.n, mu=args.mu, e=args.e, theta_ec=args.theta_ec,
                               epsilon=args.epsilon, p_omega=args.p_omega)
            result = qkd_finite_key_length(params)
            report["key_bits"] = result.key_bits
            report["rate"] = result.rate
            report["breakdown"] = dict(result.breakdown)
            if result.vacuous:
                report["warning"] = "key length is vacuous at these parameters"
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    _emit(report, args.json_style)
    return EXIT_OK


def _cmd_fqrac(args) -> int:
    try:
        params = FQRACParams(m=args.m, n=args.n, k=args.k, f_squared=args.f2)
        result = fqrac_bound(params)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    report = {
        "constraint": f"f^2 < {_fmt(result.bound_on_fsq)}",
        "bound_on_f2": result.bound_on_fsq,
        "condition_satisfied": str(result.condition_satisfied),
        "necessary_satisfied": str(result.necessary_satisfied),
    }
    if result.vacuous:
        report["warning"] = "bound is vacuous (>= 1) at these parameters"
    _emit(report, args.json_style)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eatkit",
                                     description="entropy accumulation toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-style", action="store_true",
                        help="machine output: nested keys, 12-significant-digit decimal strings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="evaluate an entropy on a state file", parents=[common])
    p.add_argument("state")
    p.add_argument("--quantity", required=True,
                   choices=["von_neumann", "h_alpha", "h_alpha_up", "h_min_smooth", "h_max_smooth"])
    p.add_argument("--cond", default="", help="comma-separated conditioning register labels")
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("verify", parents=[common], help="run a seeded verification suite")
    p.add_argument("--suite", default="all", choices=list(ALL_SUITES) + ["all"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("eat-bound", parents=[common], help="accumulation bound from a config file")
    p.add_argument("config")
    p.add_argument("--n", type=int, default=None, help="override the number of rounds")
    p.add_argument("--eps", "--epsilon", type=float, default=None, dest="epsilon")
    p.add_argument("--p-omega", type=float, default=None, dest="p_omega")
    p.add_argument("--d-a", type=int, default=None, dest="d_a")
    p.set_defaults(func=_cmd_eat_bound)

    p = sub.add_parser("qkd-rate", parents=[common], help="asymptotic threshold / finite-size key length")
    p.add_argument("--e", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--theta-ec", type=float, required=True, dest="theta_ec")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--p-omega", type=float, default=0.5, dest="p_omega")
    p.add_argument("--asymptotic", action="store_true")
    p.set_defaults(func=_cmd_qkd_rate)

    p = sub.add_parser("fqrac", parents=[common], help="random access code fidelity bound")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--f2", type=float, default=1.0)
    p.set_defaults(func=_cmd_fqrac)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
