"""Command line front end.

Exit codes: 0 ok, 2 usage or invalid parameters, 3 Moebius table problems,
4 numeric instability, 5 output could not be written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import bernoulli, catalog, mobius
from .errors import (BayesSeriesError, DomainError, MobiusTableError, NonFiniteTermError,
                     PrecisionLossError)
from .runner import PRESETS, AnalysisConfig, run_convergence, run_limits, run_sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TABLE = 3
EXIT_NUMERIC = 4
EXIT_OUTPUT = 5


class OutputError(Exception):
    pass


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {v!r}") from None


def _int(text: str) -> int:
    # accept 1e6 style as well as plain integers
    try:
        return int(text)
    except ValueError:
        f = float(text)
        if f != int(f):
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
        return int(f)


def _grid(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _common(p: argparse.ArgumentParser, limits=False):
    p.add_argument("--config", help="TOML file with analysis settings; flags override it")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--series", choices=catalog.SERIES_IDS)
    p.add_argument("--param", "-p", action="append", type=_param, default=[],
                   metavar="NAME=VALUE", help="series parameter, repeatable")
    p.add_argument("--stages", "-K", type=_int)
    p.add_argument("--eps", type=float)
    p.add_argument("--mobius-table", help="table file for mobius_dirichlet")
    p.add_argument("--out", help="trace file (default: stdout)")
    if not limits:
        p.add_argument("--n", type=_int, help="block size")
        p.add_argument("--bound", choices=catalog.BOUND_IDS)
        p.add_argument("--window", type=_int)
        p.add_argument("--chunk", type=_int)
        p.add_argument("--workers", type=_int)
        p.add_argument("--cache-dir", help="reference sum cache (default $BAYES_SERIES_CACHE)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bayes-series",
                                 description="Bayesian convergence checks for infinite series")
    sub = ap.add_subparsers(dest="cmd", required=True)

    a = sub.add_parser("analyze", help="posterior convergence trace and verdict")
    _common(a)
    a.add_argument("--verdict", help="also write the verdict JSON here")

    lm = sub.add_parser("limits", help="limit-point analysis of the running sum")
    _common(lm, limits=True)
    lm.add_argument("--M", type=_int)
    lm.add_argument("--rho", help="number, 'a-b+eps' or 'a^6'")
    lm.add_argument("--mode", dest="lp_mode", choices=["dirichlet_process", "dirichlet_finite"])
    lm.add_argument("--base", choices=["uniform", "geometric"])
    lm.add_argument("--report", help="also write the report JSON here")

    sw = sub.add_parser("sweep", help="verdicts over a parameter grid")
    _common(sw)
    sw.add_argument("--sweep-param", default="a")
    sw.add_argument("--grid", type=_grid, required=True, help="comma separated values")

    mb = sub.add_parser("mobius", help="Moebius table tools")
    msub = mb.add_subparsers(dest="mcmd", required=True)
    b = msub.add_parser("build")
    b.add_argument("--limit", type=_int, required=True)
    b.add_argument("--segment", type=_int, default=mobius.DEFAULT_SEGMENT)
    b.add_argument("--out", required=True)
    m = msub.add_parser("mertens")
    m.add_argument("--table", required=True)
    m.add_argument("--x", type=_int, required=True)

    be = sub.add_parser("bernoulli", help="log-magnitudes of Bernoulli series terms")
    be.add_argument("--series", choices=bernoulli.SERIES, required=True)
    be.add_argument("--mode", choices=[bernoulli.EXACT, bernoulli.STIRLING], default="exact")
    be.add_argument("--max-m", type=_int, required=True)
    be.add_argument("--digits", type=_int, help="use mpmath at this precision")
    be.add_argument("--out", help="CSV file (default: stdout)")

    cat = sub.add_parser("catalog", help="list available series")
    csub = cat.add_subparsers(dest="ccmd", required=True)
    csub.add_parser("list")
    return ap


_FLAG_KEYS = ("series", "stages", "eps", "mobius_table", "out", "n", "bound", "window",
              "chunk", "workers", "cache_dir", "M", "rho", "lp_mode", "base")


def config_from_args(args, engine="convergence") -> AnalysisConfig:
    data: dict = {}
    file_data: dict = {}
    if args.config:
        with open(args.config, "rb") as fh:
            file_data = tomllib.load(fh)
        if "params" in file_data:
            file_data["theta"] = file_data.pop("params")
    preset = args.preset or file_data.pop("preset", None)
    if preset:
        data.update(PRESETS[preset])
    data.update(file_data)
    cfg = AnalysisConfig.from_mapping(data)
    flags = {k: getattr(args, k, None) for k in _FLAG_KEYS}
    cfg = cfg.updated(**flags)
    if args.param:
        th = dict(cfg.theta)
        th.update(dict(args.param))
        cfg = cfg.updated(theta=th)
    if not cfg.series:
        raise DomainError("no series given (--series or config file)")
    cfg.engine = engine
    return cfg


def _load_table(path):
    if path is None:
        return None
    try:
        return mobius.load(path)
    except FileNotFoundError:
        raise MobiusTableError(f"table file not found: {path}") from None


def _fmt(x):
    return repr(float(x))


def _emit(path, text: str):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e


def _csv(header, rows, delimiter=",") -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_analyze(args) -> int:
    cfg = config_from_args(args).validate()
    table = _load_table(cfg.mobius_table)
    res = run_convergence(cfg, table)
    rows = [(j, _fmt(s), _fmt(c), y, _fmt(m), _fmt(v)) for j, s, c, y, m, v in res.rows()]
    _emit(cfg.out, _csv(["stage", "partial_sum", "bound", "y", "post_mean", "post_var"], rows))
    line = json.dumps(res.verdict.to_dict()) + "\n"
    if args.verdict:
        _emit(args.verdict, line)
    sys.stdout.write(line)
    return EXIT_OK


def cmd_limits(args) -> int:
    cfg = config_from_args(args, engine="limits").validate()
    table = _load_table(cfg.mobius_table)
    res = run_limits(cfg, table)
    M = cfg.M
    header = ["k", "running_sum", "bin"] + [f"mean_{m}" for m in range(1, M + 1)]
    rows = [(k, _fmt(s), b, *(_fmt(x) for x in means)) for k, s, b, *means in res.rows]
    _emit(cfg.out, _csv(header, rows))
    rep = res.report.to_dict() if res.report else {
        "label": None, "k": res.state.k, "note": "fewer stages than the burn-in"}
    line = json.dumps(rep) + "\n"
    if args.report:
        _emit(args.report, line)
    sys.stdout.write(line)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = config_from_args(args)
    if args.grid and args.sweep_param not in cfg.theta:
        # the swept parameter need not be given up front
        cfg = cfg.updated(theta={**cfg.theta, args.sweep_param: args.grid[0]})
    cfg = cfg.validate()
    table = _load_table(cfg.mobius_table)
    pts, first = run_sweep(cfg, args.sweep_param, args.grid, table)
    rows = [(_fmt(p.value), p.verdict.label, _fmt(p.verdict.final_mean)) for p in pts]
    _emit(cfg.out, _csv([args.sweep_param, "label", "final_mean"], rows, delimiter="\t"))
    summary = {"param": args.sweep_param, "smallest_convergent": first,
               "labels": [p.verdict.label for p in pts]}
    sys.stdout.write(json.dumps(summary) + "\n")
    return EXIT_OK


def cmd_mobius(args) -> int:
    if args.mcmd == "build":
        try:
            mobius.build_to_file(args.limit, args.out, args.segment)
        except OSError as e:
            raise OutputError(f"cannot write {args.out}: {e}") from e
        return EXIT_OK
    table = _load_table(args.table)
    print(mobius.mertens(table, args.x))
    return EXIT_OK


def cmd_bernoulli(args) -> int:
    rows, ceiling = bernoulli.term_table(args.series, args.max_m, args.mode, args.digits)
    _emit(args.out, _csv(["m", "log_abs_term", "sign", "mode"],
                         [(r.m, _fmt(r.log_abs_term), r.sign, r.mode) for r in rows]))
    if ceiling is not None:
        print(f"precision ceiling: a_m unavailable from m={ceiling} "
              f"(computed m=1..{ceiling - 1})", file=sys.stderr)
    return EXIT_OK


def cmd_catalog(args) -> int:
    rows = []
    for sid in catalog.SERIES_IDS:
        d = catalog.describe(sid)
        dom = ", ".join(f"{k} {v}" for k, v in d["domain"].items()) or "-"
        rows.append((sid, d["start_index"], dom, d["bound"], d["block_multiple"], d["term"]))
    sys.stdout.write(_csv(["id", "start", "params", "bound", "block_multiple", "term"], rows,
                          delimiter="\t"))
    return EXIT_OK


_COMMANDS = {"analyze": cmd_analyze, "limits": cmd_limits, "sweep": cmd_sweep,
             "mobius": cmd_mobius, "bernoulli": cmd_bernoulli, "catalog": cmd_catalog}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.cmd](args)
    except OutputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OUTPUT
    except MobiusTableError as e:
        print(f"table error: {e}", file=sys.stderr)
        return EXIT_TABLE
    except (NonFiniteTermError, PrecisionLossError, ArithmeticError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, BayesSeriesError, tomllib.TOMLDecodeError, KeyError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
