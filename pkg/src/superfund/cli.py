"""Command line interface.

Exit codes: 0 success (a certified UNSAT is a success), 1 a check failed,
2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import List, Optional, Sequence

import numpy as np

from superfund import berezin, verify
from superfund.coefficient import format_rational
from superfund.fundsol import (FundamentalSolution, UnsupportedDimension, coeff_a, coeff_b, gamma,
                               nu_super, odd_weights)
from superfund.radial import SingularPoint, eval_numeric

KERNEL_COLUMNS = ["m", "n", "order", "alpha", "xvec", "beta", "q", "pi_pow"]
COEFF_COLUMNS = ["l", "classical_order", "xf_power", "weight", "b", "gamma_q", "gamma_pi_pow"]


class UsageError(Exception):
    pass


def _emit(text: str, out):
    out.write(text if text.endswith("\n") else text + "\n")


def _csv(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _pretty(rows: Sequence[Sequence], header: Sequence[str]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _kernel(m: int, n: int, order: int) -> FundamentalSolution:
    if n < 0 or order < 1:
        raise UsageError("need n >= 0 and order >= 1")
    try:
        return nu_super(m, n, order)
    except UnsupportedDimension as exc:
        raise UsageError(str(exc)) from exc


def coefficient_rows(m: int, n: int, order: int) -> List[list]:
    """Weights of each classical kernel in the superspace kernel of the given order."""
    _kernel(m, n, order)
    rows = []
    if order % 2 == 0:
        k = order // 2
        for l in range(n + 1):
            g = gamma(m, l + k - 1)
            rows.append([l, 2 * l + 2 * k, 2 * n - 2 * l, format_rational(coeff_a(n, k, l)),
                         format_rational(coeff_b(k, l)), format_rational(g.q), g.pi2])
        return rows
    k = (order - 1) // 2
    for l, classical, power, w in odd_weights(n, k):
        g = gamma(m, (classical + 1) // 2 - 1)
        rows.append([l, classical, power, format_rational(w), "", format_rational(g.q), g.pi2])
    return rows


def kernel_rows(fs: FundamentalSolution) -> List[list]:
    return [[fs.m, fs.n, fs.order, a, x, b, format_rational(c.q), c.pi2]
            for (a, x, b), c in fs.expr.sorted_terms()]


def cmd_coeffs(args, out) -> int:
    rows = coefficient_rows(args.m, args.n, args.order)
    if args.format == "csv":
        _emit(_csv(rows, COEFF_COLUMNS), out)
    elif args.format == "pretty":
        _emit(_pretty(rows, COEFF_COLUMNS), out)
    else:
        fs = _kernel(args.m, args.n, args.order)
        _emit(_dump({"m": args.m, "n": args.n, "order": args.order,
                     "rows": [dict(zip(COEFF_COLUMNS, r)) for r in rows],
                     "kernel": fs.to_json_obj()}), out)
    return 0


def cmd_kernel(args, out) -> int:
    fs = _kernel(args.m, args.n, args.order)
    if args.format == "csv":
        _emit(_csv(kernel_rows(fs), KERNEL_COLUMNS), out)
    elif args.format == "pretty":
        _emit(_pretty(kernel_rows(fs), KERNEL_COLUMNS), out)
    else:
        _emit(_dump(fs.to_json_obj()), out)
    return 0


def _load_points(path: str, m: int) -> List[List[float]]:
    try:
        with open(path, encoding="utf-8") as fh:
            pts = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read points file: {exc}") from exc
    pts = [[float(v) for v in np.atleast_1d(p)] for p in pts]
    for p in pts:
        if len(p) != m:
            raise UsageError(f"point {p} does not have {m} coordinates")
    return pts


def cmd_eval(args, out) -> int:
    fs = _kernel(args.m, args.n, args.order)
    if not args.points:
        raise UsageError("--points FILE is required")
    rows, csv_rows, partial = [], [], False
    for i, p in enumerate(_load_points(args.points, args.m)):
        try:
            vals = eval_numeric(fs.expr, p)
        except SingularPoint as exc:
            partial = True
            rows.append({"point": p, "error": str(exc)})
            csv_rows.append([i, "", "", "", "error"])
            continue
        sectors = []
        for (xvec, beta), v in sorted(vals.items()):
            value = [float(c) for c in v] if xvec else float(v)
            sectors.append({"xvec": xvec, "beta": beta, "value": value})
            for comp, c in enumerate(np.atleast_1d(value)):
                csv_rows.append([i, xvec, beta, comp if xvec else "", repr(float(c))])
        rows.append({"point": p, "sectors": sectors})
    if args.format == "csv":
        _emit(_csv(csv_rows, ["point", "xvec", "beta", "component", "value"]), out)
    else:
        _emit(_dump({"m": args.m, "n": args.n, "order": args.order, "partial": partial,
                     "rows": rows}), out)
    return 0


def _parse_grid(text: Optional[str]):
    if not text:
        return None
    grid = dict(verify.DEFAULT_GRID)
    try:
        for part in text.split(";"):
            if not part.strip():
                continue
            key, vals = part.split("=")
            key = key.strip()
            if key not in grid:
                raise ValueError(key)
            grid[key] = tuple(int(v) for v in vals.split(","))
    except ValueError as exc:
        raise UsageError(f"bad grid spec {text!r}; expected e.g. 'm=1,3;n=0,1;k=1,2'") from exc
    return grid


def cmd_check(args, out) -> int:
    grid = _parse_grid(args.grid)
    suites = list(verify.SUITES) if args.suite == "all" else [args.suite]
    reports = []
    for name in suites:
        if name == "distributional":
            reports += distributional_reports(args)
            continue
        kw = {"grid": grid, "seed": args.seed, "trials": args.trials}
        if name == "fermionic" and args.n is not None:
            kw["ns"] = (args.n,)
        reports += verify.SUITES[name](**kw)
    failed = [r for r in reports if not r.passed]
    if args.format == "pretty":
        lines = [f"{r.status}  {r.check_id}  {json.dumps(r.params, sort_keys=True)}"
                 + (f"  [{r.detail['result']}]" if "result" in r.detail else "")
                 + (f"  witness: {r.witness}" if r.witness else "") for r in reports]
        _emit("\n".join(lines), out)
    else:
        _emit(verify.reports_to_json(reports), out)
    return 1 if failed else 0


def distributional_reports(args) -> List[verify.CheckReport]:
    cases = [(1, 1), (3, 1), (3, 2)] if args.m is None else [(args.m, args.n or 0)]
    reports = []
    for m, n in cases:
        battery = (berezin.load_battery(args.battery, m, n) if args.battery
                   else berezin.default_battery(m, n))
        for order, rtol in ((2, 1e-4), (4, 1e-3)):
            rep = berezin.distributional_check(nu_super(m, n, order), battery, rtol)
            worst = rep.worst
            witness = None if rep.passed else f"test function {worst.index}: rel error {worst.rel_error:.3e}"
            reports.append(verify.CheckReport(
                "distributional", {"m": m, "n": n, "order": order}, "PASS" if rep.passed else "FAIL",
                witness, detail=rep.to_json_obj()))
    return reports


def _grid_points(spec: str, m: int) -> np.ndarray:
    try:
        a, b, num = spec.split(":")
        xs = np.linspace(float(a), float(b), int(num))
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}; expected start:stop:num") from exc
    pts = np.zeros((len(xs), m))
    pts[:, 0] = xs
    return pts


def cmd_convolve(args, out) -> int:
    fs = _kernel(args.m, args.n, args.order)
    if fs.order % 2:
        raise UsageError("convolution needs an even-order kernel")
    if not args.rho:
        raise UsageError("--rho FILE is required")
    try:
        rho = berezin.load_source(args.rho, args.m, args.n)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read source: {exc}") from exc
    if args.points:
        grid = np.asarray(_load_points(args.points, args.m))
    else:
        grid = _grid_points(args.grid or "-2:2:21", args.m)
    sol = berezin.convolve_solve(fs, rho, grid, args.tol)
    obj = sol.to_json_obj()
    if fs.order == 2:
        res = berezin.convolution_residual(fs, rho, grid, args.h, args.tol)
        obj["residual"] = {"h": args.h, "max_abs": res.max_abs, "max_rel": res.max_rel,
                           "per_sector": {berezin.ca._bits(k, 2 * args.n): v
                                          for k, v in sorted(res.per_sector.items())}}
    if args.format == "csv":
        masks = sorted(sol.sectors)
        header = [f"x{i + 1}" for i in range(args.m)] + [berezin.ca._bits(k, 2 * args.n) for k in masks]
        rows = [[repr(float(c)) for c in grid[i]] + [repr(float(sol.sectors[k][i])) for k in masks]
                for i in range(len(grid))]
        _emit(_csv(rows, header), out)
    else:
        _emit(_dump(obj), out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superfund",
                                description="Fundamental solutions of super Laplace and Dirac operators")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, kernel=True):
        if kernel:
            sp.add_argument("--m", type=int, required=True)
            sp.add_argument("--n", type=int, default=0)
            sp.add_argument("--order", type=int, default=2)
        sp.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
        sp.add_argument("--tol", type=float, default=1e-10)

    sp = sub.add_parser("coeffs", help="exact weight table of a kernel")
    common(sp)
    sp.set_defaults(func=cmd_coeffs)

    sp = sub.add_parser("kernel", help="kernel terms (golden-table format)")
    common(sp)
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("eval", help="evaluate a kernel at points")
    common(sp)
    sp.add_argument("--points", required=False)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("check", help="run verification suites")
    sp.add_argument("suite", choices=sorted(verify.SUITES) + ["distributional", "all"])
    sp.add_argument("--m", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--grid")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--battery")
    common(sp, kernel=False)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("convolve", help="solve Delta f = rho by convolution")
    common(sp)
    sp.add_argument("--rho")
    sp.add_argument("--grid")
    sp.add_argument("--points")
    sp.add_argument("--h", type=float, default=1e-3)
    sp.set_defaults(func=cmd_convolve)
    return p


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", 1.0) <= 0:
        parser.error("--tol must be positive")
    try:
        return args.func(args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"superfund: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
