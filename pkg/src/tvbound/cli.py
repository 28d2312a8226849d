"""Command line interface: ``tvbound {bound,plan,simulate,verify,mad}``.

Exit status: 0 on success, 1 on invalid input, 2 when ``verify`` reports a
violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Iterable, Sequence

from . import binomial
from . import bounds as bd
from .battery import VERIFY_EPS, VERIFY_N, battery
from .distributions import from_json, nu
from .montecarlo import SIM_COLUMNS, verify_bounds

BOUND_COLUMNS = ("distribution_id", "bound_name", "n", "epsilon", "raw_value", "value", "applicable")
PLAN_COLUMNS = ("bound_name", "epsilon", "delta", "n_star", "achieved", "status")
MAD_COLUMNS = ("n", "p", "lower", "exact", "upper", "lower_applicable", "bruteforce")

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_dist(text: str | None):
    if text is None:
        return None
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return from_json(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--dist is not valid JSON: {exc}") from None


def _scale(args) -> int:
    return 4 if args.breakpoint == "4n" else 1


def _grid(single, many, name: str, default: Sequence | None = None) -> list:
    if single is not None and many is not None:
        raise UsageError(f"give either --{name} or --{name}-list, not both")
    if single is not None:
        return [single]
    if many:
        return list(many)
    if default is not None:
        return list(default)
    raise UsageError(f"--{name} or --{name}-list is required")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def render(rows: Iterable[dict], columns: Sequence[str], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "json":
        for row in rows:
            buf.write(json.dumps({c: _json_value(row[c]) for c in columns}) + "\n")
        return buf.getvalue()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in columns])
    return buf.getvalue()


def _emit(args, rows: list[dict], columns: Sequence[str]) -> None:
    text = render(rows, columns, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------------


def cmd_bound(args) -> int:
    dist = _load_dist(args.dist)
    if dist is None:
        raise UsageError("bound needs --dist")
    nu_value = float(nu(dist))
    rows = []
    for n in _grid(args.n, args.n_list, "n"):
        for eps in _grid(args.eps, args.eps_list, "eps"):
            for res in bd.all_bounds(dist, n, eps, _scale(args), nu_value):
                rows.append({"distribution_id": dist.name, "bound_name": res.bound_name, "n": n,
                             "epsilon": eps, "raw_value": res.raw_value, "value": res.value,
                             "applicable": res.applicable})
    _emit(args, rows, BOUND_COLUMNS)
    return EXIT_OK


def _plannable(dist, k) -> list[str]:
    names = ["mcdiarmid_centered", "dkw_sup", "linf"]
    if k is not None:
        names += ["crude", "devroye", "finite_k"]
    if dist is not None:
        names.append("general_ab")
        if math.isfinite(float(nu(dist))):
            names.append("nu_bound")
    return [n for n in bd.BOUND_NAMES if n in names]


def cmd_plan(args) -> int:
    dist = _load_dist(args.dist)
    k = args.k if args.k is not None else (dist.support_size if dist is not None else None)
    if args.eps is None or args.delta is None:
        raise UsageError("plan needs --eps and --delta")
    names = [args.bound] if args.bound else _plannable(dist, k)
    rows = []
    for name in names:
        try:
            res = bd.plan_n(name, args.eps, args.delta, dist=dist, k=k, scale=_scale(args))
            rows.append({"bound_name": name, "epsilon": res.epsilon, "delta": res.delta,
                         "n_star": res.n_star, "achieved": res.achieved, "status": "ok"})
        except bd.PlanningError:
            rows.append({"bound_name": name, "epsilon": args.eps, "delta": args.delta,
                         "n_star": None, "achieved": None, "status": "unreachable"})
    _emit(args, rows, PLAN_COLUMNS)
    return EXIT_OK


def _check_sim_args(args) -> None:
    if args.trials < 100:
        raise UsageError("--trials must be at least 100")
    if not 0 < args.alpha < 0.5:
        raise UsageError("--alpha must lie in (0, 0.5)")
    if args.workers < 1:
        raise UsageError("--workers must be positive")


def _sim_rows(cells: list[tuple[str, object]], args, n_default=None, eps_default=None):
    _check_sim_args(args)
    n_list = _grid(args.n, args.n_list, "n", n_default)
    eps_list = _grid(args.eps, args.eps_list, "eps", eps_default)
    if any(n < 1 for n in n_list) or any(not e > 0 for e in eps_list):
        raise UsageError("n must be positive and eps must be positive")
    rows = []
    for name, dist in cells:
        rows += verify_bounds(dist, n_list, eps_list, args.trials, args.seed, args.alpha,
                              _scale(args), args.workers, distribution_id=name)
    return rows


def cmd_simulate(args) -> int:
    dist = _load_dist(args.dist)
    if dist is None:
        raise UsageError("simulate needs --dist")
    rows = _sim_rows([(dist.name, dist)], args)
    _emit(args, [r.csv_row() for r in rows], SIM_COLUMNS)
    return EXIT_OK


def cmd_verify(args) -> int:
    rows = _sim_rows(battery(), args, VERIFY_N, VERIFY_EPS)
    _emit(args, [r.csv_row() for r in rows], SIM_COLUMNS)
    bad = [r for r in rows if r.violation_flag]
    for r in bad:
        print(f"VIOLATION {r.distribution_id} n={r.n} eps={r.eps}: {', '.join(r.violations)}",
              file=sys.stderr)
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_mad(args) -> int:
    n_list = _grid(args.n, args.n_list, "n", range(2, 21))
    if args.p_list:
        p_list = list(args.p_list)
    else:
        p_list = [i / (args.p_grid + 1) for i in range(1, args.p_grid + 1)]
    rows = []
    for n in n_list:
        for p in p_list:
            t = binomial.mad_bounds(n, p)
            brute = binomial.mad_bruteforce(n, p) if n <= binomial.BRUTEFORCE_MAX_N else None
            rows.append({"n": n, "p": p, "lower": t.lower, "exact": t.exact, "upper": t.upper,
                         "lower_applicable": t.lower_applicable, "bruteforce": brute})
    _emit(args, rows, MAD_COLUMNS)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dist", help="distribution JSON, or @path to a file holding it")
    common.add_argument("--n", type=int)
    common.add_argument("--n-list", type=_int_list)
    common.add_argument("--eps", type=float)
    common.add_argument("--eps-list", type=_float_list)
    common.add_argument("--breakpoint", choices=("n", "4n"), default="n",
                        help="split A_n/B_n at 1/n (default) or 1/(4n)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--trials", type=int, default=10000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--alpha", type=float, default=0.05)
    sim.add_argument("--workers", type=int, default=1)

    parser = _Parser(prog="tvbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("bound", parents=[common], help="evaluate every tail bound")
    p.set_defaults(func=cmd_bound)
    p = sub.add_parser("plan", parents=[common], help="minimal sample size per bound")
    p.add_argument("--bound", choices=bd.BOUND_NAMES)
    p.add_argument("--k", type=int, help="support size, when no --dist is given")
    p.add_argument("--delta", type=float)
    p.set_defaults(func=cmd_plan)
    p = sub.add_parser("simulate", parents=[common, sim], help="Monte Carlo tails for one distribution")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("verify", parents=[common, sim], help="falsification suite over the built-in battery")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("mad", parents=[common], help="binomial mean absolute deviation sweep")
    p.add_argument("--p-list", type=_float_list)
    p.add_argument("--p-grid", type=int, default=19, help="number of interior grid points in (0, 1)")
    p.set_defaults(func=cmd_mad)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, TypeError, OSError) as exc:
        print(f"tvbound {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
