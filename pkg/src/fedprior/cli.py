"""Command line entry point: ``fedprior <verb> [options]``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import synth
from .data import dump_json, load_splits, split_stats
from .experiments import ExperimentSpec, run_baseline, run_eval, run_strategies, run_sweep
from .labeling import load_population_spec
from .model import ModelParams

log = logging.getLogger("fedprior")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment spec")
    p.add_argument("--data", dest="data_dir", help="directory with train/dev/test CSV files")
    p.add_argument("--synthetic", action="store_true", default=None,
                   help="use the built-in synthetic corpus instead of --data")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--subsample", dest="subsample_fraction", type=float)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--rounds", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--dim", dest="feature_dim", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedprior", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ingest", help="parse the CSV files, cache them as JSON, print stats")
    p.add_argument("data_dir", type=Path)
    p.add_argument("--out", type=Path, default=None, help="where to write the JSON caches")

    p = sub.add_parser("synth", help="write a synthetic dataset in the public CSV schema")
    p.add_argument("out_dir", type=Path)
    p.add_argument("--seed", type=int, default=0)

    for verb, text in [("sweep", "alpha x beta sensitivity grid"),
                       ("strategies", "AGG / INDV / FED comparison"),
                       ("baseline", "centralised vs federated at a fixed alpha")]:
        _add_common(sub.add_parser(verb, help=text))

    p = sub.add_parser("eval", help="score a saved global model for a population")
    _add_common(p)
    p.add_argument("--params", type=Path, required=True, help="ModelParams checkpoint")
    p.add_argument("--population", type=Path, required=True, help="JSON [{alpha, beta?}, ...]")
    p.add_argument("--no-rescale", action="store_true")
    return parser


def make_spec(args: argparse.Namespace) -> ExperimentSpec:
    top = {k: getattr(args, k) for k in ("data_dir", "synthetic", "out_dir", "subsample_fraction")}
    fed = {k: getattr(args, k) for k in ("seed", "rounds", "learning_rate", "feature_dim")}
    fed["threads"] = args.threads
    fed = {k: v for k, v in fed.items() if v is not None}
    if args.config:
        spec = ExperimentSpec.from_file(args.config, kind=args.verb, **top)
    else:
        spec = ExperimentSpec(kind=args.verb, **{k: v for k, v in top.items() if v is not None})
    if fed:
        spec.federation = spec.federation.with_(**fed)
    return spec


def _print_rows(rows: list[dict]) -> None:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(rows[0].keys())
    for r in rows:
        w.writerow([f"{100 * v:.2f}" if isinstance(v, float) else v for v in r.values()])


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")

    if args.verb == "ingest":
        splits = load_splits(args.data_dir)
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["split", "count", "mean_rating", "min_rating", "max_rating"])
        for name, split in splits.items():
            if args.out:
                dump_json(split, args.out / f"{name}.json")
            s = split_stats(split)
            w.writerow([name, s["count"], f"{s['mean_rating']:.3f}",
                        f"{s['min_rating']:.3f}", f"{s['max_rating']:.3f}"])
        return 0

    if args.verb == "synth":
        for name, path in synth.write_dataset(args.out_dir, seed=args.seed).items():
            print(f"{name},{path}")
        return 0

    spec = make_spec(args)
    if args.verb == "strategies":
        _print_rows(run_strategies(spec))
    elif args.verb == "baseline":
        _print_rows(run_baseline(spec))
    elif args.verb == "sweep":
        cells = run_sweep(spec, threads=args.threads)
        failed = [c for c in cells if c.error]
        print(f"{len(cells) - len(failed)} cells ok, {len(failed)} failed; "
              f"see {Path(spec.out_dir) / 'sweep.csv'}")
        return 1 if failed else 0
    elif args.verb == "eval":
        report = run_eval(spec, ModelParams.load(args.params),
                          load_population_spec(args.population), rescale=not args.no_rescale)
        rows = [{"client_id": cid, "macro_p": r.macro_p, "macro_r": r.macro_r,
                 "macro_f1": r.macro_f1} for cid, r in sorted(report.per_client.items())]
        rows.append({"client_id": "overall", "macro_p": report.overall_p,
                     "macro_r": report.overall_r, "macro_f1": report.overall_f1})
        _print_rows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
