"""Command-line interface.

Three subcommands: ``test`` runs a procedure on a tree and p-value file,
``critvalues`` dumps the node-by-r threshold table, and ``simulate`` runs a
Monte Carlo experiment from a config file. All randomness flows from the
config seed. Exit codes: 0 success, 2 invalid input, 1 internal error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import io as tfio
from .critical import HIERARCHICAL_KINDS, ProcedureKind, critical_functions_for, parse_procedure
from .errors import ValidationError
from .procedures import DEFAULT_YEKUTIELI_CORRECTION, run_procedure
from .simulate import SIM_CSV_HEADER, estimate_fdr_power


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treefdr",
        description="FDR-controlling multiple testing for tree-ordered hypotheses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="run a procedure on a tree and a p-value file")
    test.add_argument("tree", help="CSV with header node_id,parent_id (parent_id 0 = root)")
    test.add_argument("pvalues", help="CSV with header node_id,p")
    test.add_argument("--procedure", default="posdep",
                      help="posdep|arbdep|blockpos|blockarb|meinshausen|yekutieli "
                           "(aliases thm1..thm4)")
    test.add_argument("--alpha", type=float, default=0.05)
    test.add_argument("--order", type=int, default=None,
                      help="stepup-down order inside each family (default: full stepup)")
    test.add_argument("--yekutieli-constant", type=float, default=DEFAULT_YEKUTIELI_CORRECTION,
                      help="level reduction used by the yekutieli procedure")
    test.add_argument("--format", choices=("json", "csv"), default="json")
    test.add_argument("--out", default=None, help="write output here instead of stdout")
    test.set_defaults(func=_cmd_test)

    crit = sub.add_parser("critvalues", help="dump the node-by-r table of thresholds")
    crit.add_argument("tree")
    crit.add_argument("--procedure", default="posdep")
    crit.add_argument("--alpha", type=float, default=0.05)
    crit.add_argument("--r-min", type=int, default=1)
    crit.add_argument("--r-max", type=int, default=None, help="default: number of nodes")
    crit.add_argument("--out", default=None)
    crit.set_defaults(func=_cmd_critvalues)

    sim = sub.add_parser("simulate", help="run a Monte Carlo experiment from a config file")
    sim.add_argument("config", help="key = value file; see README for keys")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--workers", type=int, default=None, help="override the config workers")
    sim.add_argument("--out", default=None)
    sim.set_defaults(func=_cmd_simulate)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as handle:
            handle.write(text)


def _cmd_test(args) -> int:
    kind = parse_procedure(args.procedure)
    h = tfio.read_tree_csv(args.tree)
    pvals = tfio.read_pvalues_csv(args.pvalues, h.m)
    result = run_procedure(
        pvals,
        h,
        kind,
        args.alpha,
        order=args.order,
        yekutieli_correction=args.yekutieli_constant,
    )
    if args.format == "json":
        _emit(tfio.result_to_json(result) + "\n", args.out)
    else:
        _emit(tfio.result_to_csv(result, h), args.out)
    return 0


def _cmd_critvalues(args) -> int:
    kind = parse_procedure(args.procedure)
    if kind not in HIERARCHICAL_KINDS and kind is not ProcedureKind.MEINSHAUSEN:
        raise ValidationError(
            f"procedure {kind.value!r} has no per-node critical value table"
        )
    h = tfio.read_tree_csv(args.tree)
    r_max = h.m if args.r_max is None else args.r_max
    if not 0 <= args.r_min <= r_max <= h.m + 1:
        raise ValidationError(
            f"r range {args.r_min}..{r_max} invalid for a tree of {h.m} nodes"
        )
    cf = critical_functions_for(kind, h, args.alpha)
    _emit(tfio.critvalues_csv(h, cf, range(args.r_min, r_max + 1)), args.out)
    return 0


def _cmd_simulate(args) -> int:
    try:
        with open(args.config) as handle:
            text = handle.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {args.config}: {exc}") from exc
    cfg, kinds, workers = tfio.parse_sim_config(text, source=args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed).validate()
    if args.workers is not None:
        workers = args.workers

    def progress(done: int, total: int) -> None:
        print(f"replications {done}/{total}", file=sys.stderr)

    result = estimate_fdr_power(cfg, kinds, workers=workers, progress=progress)
    text = SIM_CSV_HEADER + "\n" + "\n".join(result.csv_rows()) + "\n"
    _emit(text, args.out)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
