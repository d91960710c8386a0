"""Command-line entry point: ``fairrail <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data or solver error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .analysis import SOLVERS, budget_sweep, hypothesis_report, network_metrics, solve
from .formats import FileFormatError, Result, dump_instance, json_safe, load_instance, load_result, sweep_csv
from .heuristics import LocalSearchConfig
from .instance import Instance, build_cost, validate
from .reduction import CnfFormula, lift_to_3cnf, parse_dimacs, read_dimacs, reduce_3sat, truth_table, verify_equivalence
from .routing import format_p, parse_p, social_cost
from .svgmap import render_map

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

log = logging.getLogger("fairrail")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _p_arg(text: str) -> float:
    try:
        return parse_p(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _p_list(text: str) -> list[float]:
    return [_p_arg(tok) for tok in text.split(",") if tok.strip()]


def _load(path: str) -> Instance:
    try:
        instance = load_instance(path)
    except FileFormatError as exc:
        raise DataError(str(exc)) from None
    problems = validate(instance)
    if problems:
        raise DataError("; ".join(f"{v.code}: {v.message}" for v in problems))
    return instance


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _network_from_result(instance: Instance, path: str) -> frozenset[int]:
    try:
        result = load_result(path)
        return instance.network(result.network)
    except FileFormatError as exc:
        raise DataError(str(exc)) from None
    except (KeyError, ValueError) as exc:
        raise DataError(f"network: {exc}") from None


def cmd_validate(args) -> int:
    try:
        instance = load_instance(args.file)
    except FileFormatError as exc:
        raise DataError(str(exc)) from None
    problems = validate(instance)
    for v in problems:
        print(f"{args.file}: {v.code}: {v.message}", file=sys.stderr)
    if problems:
        return EXIT_DATA
    print(f"{args.file}: OK ({instance.n} cities, {instance.m} candidate edges, {len(instance.demand)} demand pairs)")
    return EXIT_OK


def _config(args) -> LocalSearchConfig:
    try:
        return LocalSearchConfig(m_add=args.m_add, m_del=args.m_del, sigma=args.sigma,
                                 improvement_rule=args.rule)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_solve(args) -> int:
    instance = _load(args.file)
    if args.budget is not None:
        instance = instance.with_budget(args.budget)
        if args.budget < 0:
            raise DataError(f"budget: must be non-negative, got {args.budget}")
    config = _config(args)
    if config.sigma is not None and config.sigma > instance.m:
        raise UsageError(f"--sigma: {config.sigma} exceeds the number of candidate edges ({instance.m})")
    started = time.perf_counter()
    try:
        R = solve(instance, args.p, args.solver, config)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    duration = time.perf_counter() - started
    ps = [args.p] + [q for q in (args.report_p or []) if q != args.p]
    result = Result(
        solver=args.solver,
        p=format_p(args.p),
        budget=instance.budget,
        network=[instance.edges[e].key() for e in sorted(R)],
        social_cost={format_p(q): social_cost(instance, R, q) for q in ps},
        build_cost=build_cost(instance, R),
        metrics=network_metrics(instance, R),
        config={"m_add": config.m_add, "m_del": config.m_del, "sigma": config.sigma,
                "improvement_rule": config.improvement_rule,
                "warmup": list(config.warmup) if config.warmup else None},
        instance=instance.name,
        duration_s=round(duration, 6) if args.timing else 0.0,
    )
    _emit(result.to_json(), args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    instance = _load(args.file)
    if args.budgets < 1:
        raise UsageError("--budgets: need at least one budget")
    records = budget_sweep(instance, args.p_list, args.budgets, args.solver, _config(args), workers=args.workers)
    _emit(sweep_csv(records), args.output)
    if args.report:
        report = hypothesis_report(instance, records)
        Path(args.report).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_metrics(args) -> int:
    instance = _load(args.file)
    R = _network_from_result(instance, args.network)
    cost = build_cost(instance, R)
    data = {
        "build_cost": cost,
        "feasible": cost <= instance.budget,
        "social_cost": {format_p(q): social_cost(instance, R, q) for q in args.p_list},
        "metrics": network_metrics(instance, R),
    }
    _emit(json.dumps(json_safe(data), indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_map(args) -> int:
    instance = _load(args.file)
    R = frozenset() if args.network is None else _network_from_result(instance, args.network)
    try:
        svg = render_map(instance, R)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _emit(svg, args.output)
    return EXIT_OK


def _read_cnf(path: str, lift: bool) -> CnfFormula:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    try:
        if lift:
            return lift_to_3cnf(*read_dimacs(text))
        return parse_dimacs(text)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


def cmd_reduce_sat(args) -> int:
    formula = _read_cnf(args.cnf, args.lift)
    red = reduce_3sat(formula, args.p)
    meta = {"p": format_p(red.p), "k": red.k, "target_social_cost": red.target_sw,
            "roles": {str(c): f"{r}{i}" if r != "a" else "a" for c, (r, i) in sorted(red.city_roles.items())}}
    _emit(dump_instance(red.instance, meta=meta), args.output)
    return EXIT_OK


def cmd_verify_reduction(args) -> int:
    formula = _read_cnf(args.cnf, args.lift)
    sat = truth_table(formula) is not None
    try:
        ok = verify_equivalence(formula, args.p, solver=args.solver, time_limit=args.time_limit)
    except TimeoutError as exc:
        raise DataError(str(exc)) from None
    claim = "SAT ⟺ network found" if sat else "UNSAT ⟺ no network found"
    print(f"{claim}: {'OK' if ok else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    common.add_argument("--seed", type=int, default=None, help="reserved; every command is deterministic")
    parser = _Parser(prog="fairrail", description="Fair railway network design.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def command(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    def solver_opts(sp, default="heuristic"):
        sp.add_argument("--solver", choices=SOLVERS, default=default)
        sp.add_argument("--sigma", type=int, default=None, help="candidate edges kept by preprocessing")
        sp.add_argument("--m-add", type=int, default=2, help="max edges added per local move")
        sp.add_argument("--m-del", type=int, default=2, help="max edges removed per local move")
        sp.add_argument("--rule", choices=("best", "first"), default="best",
                        help="take the cheapest improving move, or the first one found")

    sp = command("validate", "check an instance file")
    sp.add_argument("file")
    sp.set_defaults(func=cmd_validate)

    sp = command("solve", "compute a network for one budget")
    sp.add_argument("--p", type=_p_arg, required=True, help="fairness parameter (integer >= 1 or inf)")
    sp.add_argument("--budget", type=float, default=None, help="overrides the budget in the file")
    sp.add_argument("--report-p", type=_p_list, default=None, help="extra p values to evaluate, comma separated")
    sp.add_argument("--timing", action="store_true", help="record wall-clock duration in the result")
    solver_opts(sp)
    sp.add_argument("-o", "--output", default=None)
    sp.add_argument("file")
    sp.set_defaults(func=cmd_solve)

    sp = command("sweep", "solve over a budget grid for several p")
    sp.add_argument("--p-list", type=_p_list, required=True, help="comma separated, e.g. 1,2,inf")
    sp.add_argument("--budgets", type=int, required=True, help="number of evenly spaced budgets")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--report", default=None, help="write the trend report (JSON) here")
    solver_opts(sp)
    sp.add_argument("-o", "--output", default=None)
    sp.add_argument("file")
    sp.set_defaults(func=cmd_sweep)

    sp = command("metrics", "measure the network stored in a result file")
    sp.add_argument("--network", required=True, help="result JSON from 'solve'")
    sp.add_argument("--p-list", type=_p_list, default=[1, float("inf")])
    sp.add_argument("-o", "--output", default=None)
    sp.add_argument("file")
    sp.set_defaults(func=cmd_metrics)

    sp = command("map", "draw the instance and a network as SVG")
    sp.add_argument("--network", default=None, help="result JSON from 'solve' (omit to draw candidates only)")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("file")
    sp.set_defaults(func=cmd_map)

    sp = command("reduce-sat", "build the railway instance for a 3-CNF formula")
    sp.add_argument("--p", type=_p_arg, required=True)
    sp.add_argument("--lift", action="store_true", help="pad clauses with fewer than three literals")
    sp.add_argument("-o", "--output", default=None)
    sp.add_argument("cnf")
    sp.set_defaults(func=cmd_reduce_sat)

    sp = command("verify-reduction", "check satisfiability against the network decision")
    sp.add_argument("--p", type=_p_arg, required=True)
    sp.add_argument("--lift", action="store_true", help="pad clauses with fewer than three literals")
    sp.add_argument("--solver", choices=("exact", "brute"), default="exact")
    sp.add_argument("--time-limit", type=float, default=None, help="seconds before giving up")
    sp.add_argument("cnf")
    sp.set_defaults(func=cmd_verify_reduction)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    if args.seed is not None:
        log.info("--seed %d ignored: every command is deterministic", args.seed)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fairrail {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"fairrail {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
