"""Command line entry point: ``schurkit {decompose,decompose-tensor,thinset,semicircle,verify}``.

Exit codes: 0 success, 1 invariant failure or solver non-convergence,
2 parse error, 3 shape error.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from ..blockmat import NonUniformBlocksError, ShapeMismatchError
from ..polar import decompose_schur, decompose_schur_tensor, verify_decomposition
from ..thinset import SolverOptions
from . import runner, suite

EXIT_OK, EXIT_INVARIANT, EXIT_PARSE, EXIT_SHAPE = 0, 1, 2, 3


def _emit(text: str, path: str | None) -> None:
    if path and path != "-":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_docs(paths: Sequence[str]) -> list[object]:
    if not paths:
        return [json.load(sys.stdin)]
    docs = []
    for p in paths:
        if p == "-":
            docs.append(json.load(sys.stdin))
        else:
            with open(p, encoding="utf-8") as fh:
                docs.append(json.load(fh))
    return docs


def _seeds(args) -> list[int]:
    if args.seeds:
        return runner.parse_seeds(args.seeds)
    return list(range(args.seed, args.seed + args.trials))


def _solver_opts(args) -> SolverOptions:
    kw = {}
    if args.max_iter is not None:
        kw["max_iterations"] = args.max_iter
    if args.tol is not None:
        kw["relative_improvement_tolerance"] = args.tol
    return SolverOptions(**kw)


def cmd_decompose(args, tensor: bool) -> int:
    try:
        if args.random:
            n, h, seed = args.random
            A, B = runner.random_pair(n, h, seed, tensor)
        else:
            A, B = runner.read_pair(_read_docs(args.inputs))
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: cannot parse input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        dec = decompose_schur_tensor(A, B) if tensor else decompose_schur(A, B)
    except (ShapeMismatchError, NonUniformBlocksError) as exc:
        where = f" at block {exc.index}" if getattr(exc, "index", None) is not None else ""
        print(f"error: shape mismatch{where}: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    report = verify_decomposition(dec, A, B)
    checks = {c.name: {"value": c.value, "threshold": c.threshold, "passed": c.passed}
              for c in report.checks}
    if args.format == "text":
        diag = dec.diagnostics()
        lines = [f"mode: {dec.mode}  grid: {A.grid_shape}"]
        lines += [f"{k}: {v:.3e}" for k, v in diag.items()]
        lines += [f"{c.name:<22} {c.value:.3e} <= {c.threshold:.3e}  "
                  f"{'PASS' if c.passed else 'FAIL'}" for c in report.checks]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(json.dumps(runner.decomposition_to_dict(dec, checks)) + "\n", args.out)
    return EXIT_OK if report.passed else EXIT_INVARIANT


def cmd_thinset(args) -> int:
    dims = args.dim or list(runner.DEFAULT_THINSET_DIMS)
    if min(dims) < 2:
        print("error: thinset needs n >= 2", file=sys.stderr)
        return EXIT_PARSE
    reports = runner.run_thinset(dims, _seeds(args), _solver_opts(args))
    rows = [runner.report_row(r) for r in reports]
    summary = runner.summarize_thinset(rows)
    if args.format == "csv":
        _emit(runner.thinset_rows_to_csv(rows), args.out)
        sys.stderr.write(runner.thinset_summary_text(summary))
    elif args.format == "text":
        _emit(runner.thinset_summary_text(summary), args.out)
    else:
        _emit(runner.jsonl(rows) + runner.jsonl({"summary": s} for s in summary), args.out)
    return EXIT_OK if all(r["converged"] for r in rows) else EXIT_INVARIANT


def cmd_semicircle(args) -> int:
    dims = args.dim or [200]
    rows = runner.run_semicircle(dims, _seeds(args))
    summary = runner.summarize_semicircle(rows)
    if args.format == "csv":
        _emit(runner.semicircle_csv(rows), args.out)
    elif args.format == "text":
        _emit(runner.semicircle_text(rows, summary), args.out)
    else:
        _emit(runner.jsonl(rows) + runner.jsonl({"summary": s} for s in summary), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    outcomes = suite.run_suite(sizes=args.sizes, trials=args.trials, seed=args.seed,
                               perturb=args.perturb)
    if args.format == "json":
        _emit(runner.jsonl(vars(o) for o in outcomes), args.out)
    else:
        _emit(suite.format_table(outcomes), args.out)
    return EXIT_OK if all(o.passed for o in outcomes) else EXIT_INVARIANT


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv", "text"), default=None)
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")

    batch = argparse.ArgumentParser(add_help=False)
    batch.add_argument("-n", "--dim", type=int, action="append", help="dimension (repeatable)")
    batch.add_argument("--seed", type=int, default=0, help="first seed (default 0)")
    batch.add_argument("--seeds", metavar="A..B", help="inclusive seed range; overrides --seed")
    batch.add_argument("--trials", type=int, default=1, help="seeds per dimension when --seeds is absent")

    p = argparse.ArgumentParser(prog="schurkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    for name, help_ in (("decompose", "factor A □ B"), ("decompose-tensor", "factor A ⊠ B")):
        d = sub.add_parser(name, parents=[common], help=help_)
        d.add_argument("inputs", nargs="*", help="one file holding [A, B] or two files; default stdin")
        d.add_argument("--random", nargs=3, type=int, metavar=("N", "H", "SEED"),
                       help="synthetic N x N grid, block size H (max dim H for ⊠)")

    t = sub.add_parser("thinset", parents=[common, batch], help="witness experiment")
    t.add_argument("--max-iter", type=int)
    t.add_argument("--tol", type=float)

    sub.add_parser("semicircle", parents=[common, batch], help="eigenvalue statistics")

    v = sub.add_parser("verify", parents=[common], help="randomized invariant suite")
    v.add_argument("--sizes", type=int, nargs="+", default=[1, 2, 3, 4])
    v.add_argument("--trials", type=int, default=3)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--perturb", type=float, default=0.0,
                   help="scale every middle factor by 1 + PERTURB (fault injection)")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        parser.error("--trials must be >= 1")
    defaults = {"thinset": "json", "semicircle": "json", "verify": "text"}
    if args.format is None:
        args.format = defaults.get(args.command, "json")
    try:
        if args.command in ("decompose", "decompose-tensor"):
            return cmd_decompose(args, tensor=args.command == "decompose-tensor")
        if args.command == "thinset":
            return cmd_thinset(args)
        if args.command == "semicircle":
            return cmd_semicircle(args)
        return cmd_verify(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
