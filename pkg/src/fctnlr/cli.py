"""Command line front end: complete, bench, metrics, import-frames.

Exit codes: 0 success, 1 usage or input error, 2 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys

from . import fileio, metrics
from .bench import BenchConfig, run_bench
from .metrics import quality_report
from .solver import Observation, SolverConfig, run
from .sylvester import NumericalFailure


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this project reserves 2 for numeric
    # failures, so route usage errors to exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_rank(text: str, n: int):
    vals = [int(p) for p in text.replace(",", " ").split()]
    need = n * (n - 1) // 2
    if len(vals) == 1:
        return vals[0]
    if len(vals) == need:
        return vals
    raise ValueError(
        f"rank list needs 1 or {need} entries for an order-{n} tensor, got {len(vals)}"
    )


def _parse_pair(text: str):
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ValueError(f"expected two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="fctnlr",
        description="Tensor completion by trace-regularized fully-connected "
        "tensor network decomposition.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("complete", help="complete a partially observed tensor")
    pc.add_argument("--input", required=True, help="observed tensor container")
    pc.add_argument("--output", required=True, help="completed tensor container")
    pc.add_argument("--mask", help="mask container marking observed entries")
    pc.add_argument(
        "--sr",
        type=float,
        help="draw the mask at this sampling rate from --seed instead of reading one",
    )
    pc.add_argument("--save-mask", help="write the drawn mask here")
    pc.add_argument("--report", help="write the per-iteration trace CSV here")
    pc.add_argument(
        "--algorithm", choices=("fctnlr", "afctnlr"), default="fctnlr"
    )
    pc.add_argument("--lambda", dest="lam", type=float, default=0.35,
                    help="smoothing penalty weight")
    pc.add_argument("--delta", type=float, default=0.5,
                    help="diagonal shift of the smoothing operator")
    pc.add_argument("--rho", type=float, default=0.1, help="proximal damping")
    pc.add_argument("--eps", type=float, default=1e-4, help="relative-change stop")
    pc.add_argument("--max-iters", type=int, default=500)
    pc.add_argument("--max-rank", default="2",
                    help="one value or the full comma-separated bond table")
    pc.add_argument("--initial-rank", default=None,
                    help="starting bond table (default: all ones)")
    pc.add_argument("--rank-policy", choices=("threshold", "fixed"),
                    default="threshold")
    pc.add_argument("--extrapolation", default=None, metavar="ALPHA,BETA",
                    help="factor extrapolation weights, e.g. 0.6,0.5")
    pc.add_argument("--laplacian-sign",
                    choices=("positive-definite", "as-printed"),
                    default="positive-definite")
    pc.add_argument("--no-shuffle", action="store_true",
                    help="keep the identity visiting order in afctnlr")
    pc.add_argument("--cache-budget", type=int, default=1 << 30,
                    help="reuse cache budget in bytes")
    pc.add_argument("--seed", type=int, default=0)
    pc.set_defaults(func=_cmd_complete)

    pb = sub.add_parser("bench", help="paired benchmark of the two variants")
    pb.add_argument("--shape", default="40,40,40,40",
                    help="comma-separated equal extents, e.g. 40,40,40,40")
    pb.add_argument("--rank", type=int, default=4)
    pb.add_argument("--iters", type=int, default=30)
    pb.add_argument("--repeat", type=int, default=5)
    pb.add_argument("--sr", type=float, default=0.3)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--out", help="write measurement + prediction rows here")
    pb.set_defaults(func=_cmd_bench)

    pm = sub.add_parser("metrics", help="quality of a reconstruction")
    pm.add_argument("--truth", required=True, help="reference tensor container")
    pm.add_argument("--est", required=True, help="reconstruction container")
    pm.add_argument("--mask", help="also report the error off the observed set")
    pm.add_argument("--peak", type=float, default=1.0)
    pm.set_defaults(func=_cmd_metrics)

    pi = sub.add_parser(
        "import-frames", help="stack netpbm frames into an order-4 tensor"
    )
    pi.add_argument("--input-dir", required=True)
    pi.add_argument("--output", required=True)
    pi.set_defaults(func=_cmd_import_frames)
    return parser


def _cmd_complete(args) -> int:
    values = fileio.read_tensor(args.input)
    if (args.mask is None) == (args.sr is None):
        raise ValueError("give exactly one of --mask or --sr")
    if args.mask is not None:
        mask = fileio.read_mask(args.mask)
    else:
        mask = fileio.sample_mask(values.shape, args.sr, args.seed)
    if args.save_mask:
        fileio.write_mask(args.save_mask, mask)
    obs = Observation.from_dense(values, mask)
    n = values.ndim
    cfg = SolverConfig(
        lam=args.lam,
        delta=args.delta,
        rho=args.rho,
        eps=args.eps,
        max_iters=args.max_iters,
        max_rank=_parse_rank(args.max_rank, n),
        initial_rank=(
            _parse_rank(args.initial_rank, n) if args.initial_rank is not None else None
        ),
        rank_policy=args.rank_policy,
        algorithm=args.algorithm,
        laplacian_sign=args.laplacian_sign,
        extrapolation=(
            _parse_pair(args.extrapolation) if args.extrapolation is not None else None
        ),
        shuffle=not args.no_shuffle,
        seed=args.seed,
        cache_budget=args.cache_budget,
    )
    res = run(obs, cfg)
    fileio.write_tensor(args.output, res.x)
    if args.report:
        rows = [
            {
                "iteration": rec.iteration,
                "objective": f"{rec.objective:.17g}",
                "rel_change": f"{rec.rel_change:.17g}",
                "wall_ms": f"{rec.wall_ms:.3f}",
                "flops": rec.flops,
                "cache_hits": rec.cache_hits,
                "rank": "|".join(str(v) for v in rec.rank),
            }
            for rec in res.trace
        ]
        fileio.write_report_csv(
            args.report,
            rows,
            ["iteration", "objective", "rel_change", "wall_ms", "flops",
             "cache_hits", "rank"],
        )
    print(
        f"completed: iterations={res.iterations} converged={res.converged} "
        f"objective={res.objective:.10g}"
    )
    return 0


def _cmd_bench(args) -> int:
    cfg = BenchConfig.from_shape(
        args.shape,
        rank=args.rank,
        iters=args.iters,
        repeats=args.repeat,
        sample_rate=args.sr,
        seed=args.seed,
    )
    res = run_bench(cfg)
    from .bench import CSV_FIELDS

    if args.out:
        fileio.write_report_csv(args.out, res.rows(), CSV_FIELDS)
        for alg in ("fctnlr", "afctnlr"):
            print(
                f"{alg}: median_wall_ms={res.medians[alg]:.3f} "
                f"total_flops={res.totals[alg]} cache_hits={res.cache_hits[alg]}"
            )
        print(f"speedup: afctnlr/fctnlr median wall ratio = {res.speedup():.4f}")
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in res.rows():
            writer.writerow(row)
    return 0


def _cmd_metrics(args) -> int:
    est = fileio.read_tensor(args.est)
    truth = fileio.read_tensor(args.truth)
    mask = fileio.read_mask(args.mask) if args.mask else None
    rep = quality_report(est, truth, mask=None, peak=args.peak)
    off = metrics.rel_err(est, truth, mask=mask) if mask is not None else math.nan
    writer = csv.writer(sys.stdout)
    writer.writerow(["psnr", "ssim", "rel_err", "rel_err_offmask"])
    writer.writerow(
        [f"{rep.psnr:.10g}", f"{rep.ssim:.10g}", f"{rep.rel_err:.10g}", f"{off:.10g}"]
    )
    return 0


def _cmd_import_frames(args) -> int:
    tensor = fileio.import_frames(args.input_dir)
    fileio.write_tensor(args.output, tensor)
    print(f"imported: shape={tensor.shape}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalFailure as exc:
        print(f"fctnlr: numeric failure: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"fctnlr: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
