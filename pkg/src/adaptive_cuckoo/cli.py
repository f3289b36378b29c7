"""Command-line entry point: ``acf synthetic|trace|model|sweep|gen-trace``."""

from __future__ import annotations

import argparse
import secrets
import sys

from .experiment import (
    DESK_CELLS,
    DESK_MAX_QUERIES,
    ExperimentError,
    ExperimentSpec,
    model,
    run,
    sweep,
    write_csv,
)
from .workload import SUPPORTED_RATIOS, SyntheticSpec, TraceSpec, gen_trace


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def _count(text):
    return int(float(text))


def _common(p, variant=True):
    if variant:
        p.add_argument("--variant", required=True,
                       help="baseline-4x1, baseline-pk-2x4, acf-single, acf-single-s<k>, acf-multi")
        p.add_argument("--bits", type=int, default=12, help="bits per cell (a)")
    p.add_argument("--selector-bits", "-s", type=int, default=None,
                   help="selector bits for acf-single (default 1)")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed; a random one is drawn and printed when omitted")
    p.add_argument("--cells", type=_count, default=DESK_CELLS, help="total cells m")
    p.add_argument("--load", type=float, default=0.95, help="target load")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--min-fp", type=int, default=0,
                   help="keep adding trials until this many false positives are seen")
    p.add_argument("--max-trials", type=int, default=None)
    p.add_argument("--alpha-on-move", choices=("keep", "reset"), default="keep")
    p.add_argument("--model-samples", type=_count, default=100_000,
                   help="Monte Carlo buckets for the multi-cell model")
    p.add_argument("--out", default="-", help="CSV destination ('-' for stdout)")


def _synthetic_flags(p):
    p.add_argument("--ratio", type=float, default=10, help="A/S ratio")
    p.add_argument("--n-e", type=float, default=100, help="mean queries per negative key")
    p.add_argument("--skew", type=float, default=0.0, help="Zipf exponent (0 = uniform)")
    p.add_argument("--max-queries", type=_count, default=DESK_MAX_QUERIES,
                   help="cap on stream length (0 for none)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthetic", help="one configuration on a synthetic stream")
    _common(p)
    _synthetic_flags(p)

    p = sub.add_parser("trace", help="replay a flow-key file")
    _common(p)
    p.add_argument("--path", required=True, help="flow-key file, one key per line")
    p.add_argument("--ratio", type=float, default=10, help="A/S ratio used to size the table")

    p = sub.add_parser("model", help="analytic prediction only")
    _common(p)
    _synthetic_flags(p)

    p = sub.add_parser("sweep", help="grid over variants, bit widths and ratios")
    _common(p, variant=False)
    p.add_argument("--variants",
                   default="baseline-4x1,acf-single-s1,acf-single-s2,acf-single-s3,acf-multi")
    p.add_argument("--bits", type=_int_list, default=[8, 12, 16])
    p.add_argument("--ratios", type=_float_list, default=list(SUPPORTED_RATIOS))
    p.add_argument("--n-e", type=float, default=100)
    p.add_argument("--skew", type=float, default=0.0)
    p.add_argument("--max-queries", type=_count, default=DESK_MAX_QUERIES)
    p.add_argument("--trace", default=None, help="replay this flow-key file instead")

    p = sub.add_parser("gen-trace", help="write a surrogate Zipf flow trace")
    p.add_argument("--out", required=True)
    p.add_argument("--flows", type=_count, default=691_371)
    p.add_argument("--packets", type=_count, default=18_460_000)
    p.add_argument("--zipf", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    return parser


def _seed(args) -> int:
    if args.seed is None:
        args.seed = secrets.randbits(63)
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _spec(args, variant, bits, workload) -> ExperimentSpec:
    return ExperimentSpec(
        variant=variant, bits_per_cell=bits, s=args.selector_bits or 0, cells=args.cells,
        workload=workload, trials=args.trials, seed=args.seed,
        alpha_on_move=args.alpha_on_move, model_samples=args.model_samples,
        min_fp=args.min_fp, max_trials=args.max_trials)


def _synthetic(args, ratio=None) -> SyntheticSpec:
    return SyntheticSpec(target_load=args.load, ratio=args.ratio if ratio is None else ratio,
                         n_e=args.n_e, skew=args.skew, seed=args.seed,
                         max_queries=args.max_queries or None)


def _open(path):
    return sys.stdout if path == "-" else open(path, "w", newline="", encoding="utf-8")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen-trace":
            _seed(args)
            gen_trace(args.out, args.flows, args.packets, args.zipf, args.seed)
            return 0
        _seed(args)
        out = _open(args.out)
        try:
            if args.command == "sweep":
                if args.trace:
                    workload = TraceSpec(args.trace, seed=args.seed, target_load=args.load)
                else:
                    args.ratio = 1
                    workload = _synthetic(args)
                base = _spec(args, "baseline-4x1", args.bits[0], workload)
                reports = sweep(base, args.ratios, args.bits,
                                [v for v in args.variants.split(",") if v], out=out)
                return 0 if all(r.status == "ok" for r in reports) else 1
            if args.command == "trace":
                workload = TraceSpec(args.path, args.ratio, args.seed, args.load)
            else:
                workload = _synthetic(args)
            spec = _spec(args, args.variant, args.bits, workload)
            report = model(spec) if args.command == "model" else run(spec)
            if report.model_stderr is not None:
                print(f"model_fpr stderr: {report.model_stderr!r}", file=sys.stderr)
            write_csv([report], out)
        finally:
            if out is not sys.stdout:
                out.close()
    except (ExperimentError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
