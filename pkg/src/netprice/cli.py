"""Command line front end.

Exit codes: 0 success, 1 invalid network, 2 solver or verification
failure, 3 bad input (files, arguments, unsupported options).
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import equilibria, files, oracle, scenarios
from .demandkit import Linear, Logit, Power
from .errors import InputError, NetPriceError, NetworkValidationError

TOL_ENV = "NETPRICE_TOL"

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _default_tol():
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return equilibria.DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not tol > 0:
        raise InputError(f"{TOL_ENV} must be positive")
    return tol


def _table(headers, rows) -> str:
    """Left-aligned text table; floats shown with 4 decimals."""
    def cell(x):
        if isinstance(x, (float, np.floating)):
            return f"{float(x):.4f}"
        return str(x)

    body = [[cell(x) for x in r] for r in rows]
    widths = [max(len(str(h)), *(len(r[k]) for r in body)) if body else len(str(h))
              for k, h in enumerate(headers)]
    line = lambda r: "  ".join(str(x).ljust(w) for x, w in zip(r, widths)).rstrip()
    return "\n".join([line(headers), line(["-" * w for w in widths])] + [line(r) for r in body])


def _emit(text):
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _solve(model, args):
    if args.exact:
        if not isinstance(model.demand, (Linear, Power)):
            raise InputError(f"--exact needs linear or power demand, got {model.demand.family}")
        return equilibria.solve_linear_closed_form(model, exact=True)
    return equilibria.solve(model, args.tol)


def _firm_rows(model, report):
    return [{"firm": x, "cost": float(c), "price": float(p), "markup": float(m),
             "profit": float(pi), "influentiality": float(i)}
            for x, c, p, m, pi, i in zip(report.labels, model.costs, report.prices,
                                         report.markups, report.profits, report.influentiality)]


def _verify_rows(curves, labels):
    return [{"firm": labels[c.firm], "equilibrium_profit": c.equilibrium_profit,
             "best_grid_profit": float(c.profit.max()) if len(c.profit) else float("nan"),
             "grid_argmax": c.argmax, "dropped": len(c.dropped),
             "result": "pass" if c.passed else "FAIL"} for c in curves]


def cmd_validate(args):
    model = files.load_model(args.model)
    net = model.net
    info = {"valid": True, "firms": list(net.labels), "edges": len(net.edges()), "depth": net.depth,
            "path_totals": [int(t) for t in net.path_counts.totals]}
    if args.format == "json":
        _emit(files.to_json(info))
    elif args.format == "csv":
        _emit(files.to_csv([{"firm": x, "out_degree": int(d)} for x, d in zip(net.labels, equilibria.degree(net))]))
    else:
        _emit(f"valid: {net.n} firms, {info['edges']} influence edges, depth {net.depth}")
    return EXIT_OK


def cmd_solve(args):
    model = files.load_model(args.model)
    report = _solve(model, args)
    curves = oracle.verify(model, report) if args.verify else None
    if args.format == "json":
        out = report.to_dict()
        if curves is not None:
            out["verification"] = _verify_rows(curves, model.labels)
        _emit(files.to_json(out))
    elif args.format == "csv":
        rows = _firm_rows(model, report)
        rows.append({"firm": "total", "cost": model.total_cost, "price": report.P_star,
                     "markup": float(report.markups.sum()), "profit": report.total_profit,
                     "quantity": report.quantity, "cs": report.cs, "dwl": report.dwl, "sw": report.sw})
        _emit(files.to_csv(rows))
    else:
        rows = _firm_rows(model, report)
        head = f"P* = {report.P_star:.4f}"
        if report.exact:
            head += f"  (exact {report.exact['P_star']})"
        lines = [head, "", _table(list(rows[0]) if rows else ["firm"], [list(r.values()) for r in rows]), "",
                 _table(["quantity", "total profit", "CS", "DWL", "SW", "residual", "iterations"],
                        [[report.quantity, report.total_profit, report.cs, report.dwl, report.sw,
                          f"{report.residual:.2e}", report.iterations]])]
        if report.exact:
            lines += ["", "exact prices: " + ", ".join(f"{x}={p}" for x, p in zip(report.labels, report.exact["prices"]))]
        if curves is not None:
            vrows = _verify_rows(curves, model.labels)
            lines += ["", _table(list(vrows[0]), [list(r.values()) for r in vrows])] if vrows else []
        _emit("\n".join(lines))
    if curves is not None and not all(c.passed for c in curves):
        print("error: deviation check failed for " +
              ", ".join(model.labels[c.firm] for c in curves if not c.passed), file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_centrality(args):
    model = files.load_model(args.model)
    beta = args.beta
    if beta is None:
        beta = model.demand.beta if isinstance(model.demand, Power) else 1.0
    beta = float(Fraction(str(beta)))
    if not beta > 0:
        raise InputError("--beta must be positive")
    report = _solve(model, args)
    rows = [{"firm": x, "degree": int(d), "bonacich": float(b), "influentiality": float(i)}
            for x, d, b, i in zip(model.labels, equilibria.degree(model.net),
                                  equilibria.bonacich(model.net, beta), report.influentiality)]
    if args.format == "json":
        _emit(files.to_json({"beta": beta, "firms": rows}))
    elif args.format == "csv":
        _emit(files.to_csv(rows))
    else:
        _emit(f"beta = {beta:g}\n" + _table(["firm", "degree", "bonacich", "influentiality"],
                                           [list(r.values()) for r in rows]))
    return EXIT_OK


def cmd_verify(args):
    model = files.load_model(args.model)
    report = _solve(model, args)
    curves = oracle.verify(model, report, size=args.size)
    rows = _verify_rows(curves, model.labels)
    if args.curves:
        out = Path(args.curves)
        out.mkdir(parents=True, exist_ok=True)
        for c in curves:
            data = [{"price": p, "final_price": P, "profit": pi} for p, P, pi in c.rows()]
            files.write_text(out / f"deviation_{model.labels[c.firm]}.csv", files.to_csv(data))
    if args.format == "json":
        _emit(files.to_json({"P_star": report.P_star, "firms": rows}))
    elif args.format == "csv":
        _emit(files.to_csv(rows))
    else:
        _emit(_table(list(rows[0]), [list(r.values()) for r in rows]) if rows else "no firms to check")
    return EXIT_OK if all(c.passed for c in curves) else EXIT_SOLVER


def cmd_compare(args):
    base, items = files.load_scenarios(args.scenarios)
    comp = scenarios.run_comparison(base, items, args.tol)
    rows = comp.rows()
    if args.format == "json":
        out = comp.to_dict()
        out["table"] = rows
        _emit(files.to_json(out))
    elif args.format == "csv":
        _emit(files.to_csv(rows))
    else:
        headers = list(dict.fromkeys(k for r in rows for k in r))
        lines = [_table(headers, [[r.get(k, "") for k in headers] for r in rows]), ""]
        for r in comp.results:
            v = r.verdict
            text = f"{r.name}: socially {v['social']}"
            if v["private"] is not None:
                text += f", privately {v['private']}"
            text += ", Pareto improvement" if v["pareto"] else ", not a Pareto improvement"
            lines.append(text)
        _emit("\n".join(lines))
    return EXIT_OK


def cmd_dwl_sweep(args):
    params = files.load_sweep(args.params)
    rows = scenarios.dwl_sweep(params["demand"], params["n_range"], params["kinds"], params["c0"])
    if args.format == "json":
        _emit(files.to_json(rows))
    elif args.format == "csv":
        _emit(files.to_csv(rows))
    else:
        _emit(_table(["n", "kind", "P*", "DWL"], [list(r.values()) for r in rows]))
    return EXIT_OK


def cmd_logit_bounds(args):
    model = files.load_model(args.model)
    if not isinstance(model.demand, Logit):
        raise InputError(f"logit-bounds needs logit demand, got {model.demand.family}")
    report = equilibria.solve(model, args.tol)
    b = equilibria.logit_bounds(model, report)
    rows = [{"firm": x, "lower_bound": float(lo), "price": float(p), "gap": float(g)}
            for x, lo, p, g in zip(model.labels, b["lower_prices"], report.prices, b["price_gaps"])]
    summary = {"lower_P": b["lower_P"], "P_star": b["P_star"], "gap": b["gap"],
               "P_bound_holds": b["P_bound_holds"], "price_bounds_hold": b["price_bounds_hold"]}
    if args.format == "json":
        _emit(files.to_json({**summary, "firms": rows}))
    elif args.format == "csv":
        _emit(files.to_csv(rows + [{"firm": "total", "lower_bound": b["lower_P"],
                                    "price": b["P_star"], "gap": b["gap"]}]))
    else:
        _emit(f"P* = {b['P_star']:.4f} > C + n/alpha = {b['lower_P']:.4f}: {b['P_bound_holds']}  "
              f"(gap {b['gap']:.4e})\n"
              + _table(["firm", "c_i + 1/alpha", "price", "gap"], [list(r.values()) for r in rows])
              + f"\nall prices above their bounds: {b['price_bounds_hold']}")
    return EXIT_OK if b["P_bound_holds"] and b["price_bounds_hold"] else EXIT_SOLVER


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("table", "json", "csv"), default="table",
                        help="output format (default: table)")
    common.add_argument("--tol", type=float, default=None,
                        help=f"relative solver tolerance (default: ${TOL_ENV} or {equilibria.DEFAULT_TOL:g})")

    parser = _Parser(prog="netprice", description="Equilibrium prices on supply-chain influence networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="check a model's influence network")
    p.add_argument("model", help="model JSON file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", parents=[common], help="solve for equilibrium prices")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--exact", action="store_true", help="exact rational closed form (linear/power demand)")
    p.add_argument("--verify", action="store_true", help="run the deviation check after solving")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("centrality", parents=[common], help="degree, Bonacich and influentiality per firm")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--beta", default=None, help="Bonacich weight (default: power beta, else 1)")
    p.add_argument("--exact", action="store_true", help="exact rational closed form (linear/power demand)")
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("verify", parents=[common], help="deviation check for every firm")
    p.add_argument("model", help="model JSON file")
    p.add_argument("--curves", metavar="DIR", help="write one deviation-curve CSV per firm into DIR")
    p.add_argument("--size", type=int, default=201, help="grid points per firm (at least 101)")
    p.add_argument("--exact", action="store_true", help="check the exact closed-form solution")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", parents=[common], help="merger and tariff scenarios against a base")
    p.add_argument("scenarios", help="scenario JSON file")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dwl-sweep", parents=[common], help="dead-weight loss of empty vs chain networks")
    p.add_argument("params", help="sweep JSON file")
    p.set_defaults(func=cmd_dwl_sweep)

    p = sub.add_parser("logit-bounds", parents=[common], help="lower bounds for logit equilibria")
    p.add_argument("model", help="model JSON file")
    p.set_defaults(func=cmd_logit_bounds)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.tol is None:
            args.tol = _default_tol()
        if not args.tol > 0:
            raise InputError("--tol must be positive")
        return args.func(args)
    except NetworkValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InputError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except NetPriceError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
