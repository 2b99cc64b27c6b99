"""Command-line entry point: ``hermite-fields <subcommand> ...``.

Exit codes: 0 success, 2 self-test gate failure, 1 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import chaos_oracle, dump, harness, hermite, quadvar
from .params import derive_exponents

EXIT_OK, EXIT_USAGE, EXIT_GATE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _params(args):
    H = args.H
    if args.d is not None:
        if len(H) == 1:
            H = H * args.d
        elif len(H) != args.d:
            raise UsageError(f"--H has {len(H)} entries but --d is {args.d}")
    return derive_exponents(args.q, H)


def _grids(args, d: int, default=None) -> list[tuple[int, ...]]:
    grids = args.N or ([default] if default is not None else [])
    if not grids:
        raise UsageError("at least one --N is required")
    out = []
    for N in grids:
        if len(N) == 1:
            N = N * d
        if len(N) != d:
            raise UsageError(f"--N {','.join(map(str, N))} does not have {d} entries")
        out.append(N)
    return out


def _emit(args, report: dict) -> None:
    text = harness.report_csv(report) if args.format == "csv" else harness.report_json(report)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    params = _params(args)
    grids = _grids(args, params.d)
    if len(grids) != 1:
        raise UsageError("simulate takes exactly one --N (the simulation resolution)")
    n = grids[0]
    if not args.out:
        raise UsageError("simulate needs --out PATH for the binary dump")
    if args.method == "kernel":
        field = hermite.simulate_direct_kernel(params, n[0], args.seed)
    else:
        field = hermite.simulate_hermite_rank(params, n, args.seed)
    base = dump.write_field(args.out, field)
    sys.stdout.write(json.dumps({"bin": str(base.with_suffix(".bin")), **dump.field_metadata(field)},
                                sort_keys=True) + "\n")
    return EXIT_OK


def _load(args):
    if not args.input:
        raise UsageError("--in PATH (a field dump) is required")
    return dump.read_field(args.input)


def cmd_qv(args) -> int:
    field = _load(args)
    rows = []
    for N in _grids(args, field.params.d):
        r = quadvar.field_statistics(field, N)
        row = {f"N{j + 1}": Nj for j, Nj in enumerate(N)}
        row.update(V_N=r.V_N, T_N="" if r.T_N is None else r.T_N)
        rows.append(row)
    _emit(args, {"rows": rows})
    return EXIT_OK


def cmd_estimate_h(args) -> int:
    field = _load(args)
    d = field.params.d
    grids = _grids(args, d)
    levels = [sorted({N[j] for N in grids}) for j in range(d)]
    est = quadvar.estimate_hurst(field, levels)
    row = {f"levels{j + 1}": " ".join(map(str, L)) for j, L in enumerate(levels)}
    row.update({f"H{j + 1}_hat": h for j, h in enumerate(est)})
    _emit(args, {"rows": [row]})
    return EXIT_OK


def cmd_oracle_variance(args) -> int:
    params = _params(args)
    rows = [chaos_oracle.variance_report(N, params).row() for N in _grids(args, params.d)]
    _emit(args, {"rows": rows})
    return EXIT_OK


def _config(args, params, default_N=None, default_m=8):
    return harness.ExperimentConfig(params=params, N_list=tuple(_grids(args, params.d, default_N)),
                                    oversample=args.oversample or default_m, replicas=args.replicas,
                                    root_seed=args.seed, method=args.method, workers=args.workers)


def cmd_mc_limit(args) -> int:
    params = _params(args)
    report = harness.run_limit_experiment(_config(args, params), timing=args.timing)
    _emit(args, report)
    return EXIT_OK


def cmd_q1_regression(args) -> int:
    args.q = 1
    params = _params(args)
    report = harness.run_q1_regression(_config(args, params, default_N=(4096,), default_m=2), timing=args.timing)
    _emit(args, report)
    return EXIT_OK


def cmd_selftest(args) -> int:
    report = harness.selftest(args.seed)
    _emit(args, report)
    return EXIT_OK if report["passed"] else EXIT_GATE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=int, default=2)
    common.add_argument("--d", type=int, default=None)
    common.add_argument("--H", type=_floats, default=(0.7,), help="h1[,h2,...]")
    common.add_argument("--N", type=_ints, action="append", help="n1[,n2,...]; repeatable")
    common.add_argument("--oversample", type=int, default=None, help="simulation/observation ratio m")
    common.add_argument("--replicas", type=int, default=2000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--method", choices=("rank", "kernel"), default="rank")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--in", dest="input", default=None, help="field dump (for qv, estimate-h)")
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--timing", action="store_true", help="add wall-clock seconds to reports")

    p = _Parser(prog="hermite-fields", description="Hermite random fields: simulation, quadratic variations, oracles.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn, text in (
        ("simulate", cmd_simulate, "simulate one field and write a binary dump"),
        ("qv", cmd_qv, "quadratic variation and normalized statistic of a dump"),
        ("estimate-h", cmd_estimate_h, "quadratic-variation Hurst estimate of a dump"),
        ("oracle-variance", cmd_oracle_variance, "deterministic chaos variances"),
        ("mc-limit", cmd_mc_limit, "Monte Carlo check of the Rosenblatt limit"),
        ("q1-regression", cmd_q1_regression, "fractional Brownian regimes (q = 1)"),
        ("selftest", cmd_selftest, "fast deterministic gates"),
    ):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, FileNotFoundError, MemoryError) as exc:
        sys.stderr.write(f"hermite-fields {args.command}: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
