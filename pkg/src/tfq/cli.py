"""Command-line entry point wiring the two-step workflow: label pairs and
train the metric, then search transfer functions against a target image.

Progress goes to stderr; machine-readable results go to files or stdout.
Exit codes: 0 success, 2 usage error, 1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import metric as metric_mod
from .metric.evaluate import MseMetric, SiameseMetric
from .metric.gradcheck import run_suite
from .pairstudio import serve
from .raycast import load_image, render, resample64, save_image
from .search import SearchConfig, report_to_json, run_search
from .transfer import SeedConfig, seed_population, tf_from_json, tf_to_json
from .util import atomic_write_text
from .volume import bin_volume, load_volume


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_serve_pairs(args: argparse.Namespace) -> int:
    serve(args.images, args.out, port=args.port, seed=args.seed, ui_dir=args.ui)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    pairs = metric_mod.load_pairs(args.pairs)
    _log(f"training on {len(pairs)} pairs for {args.epochs} epochs (seed {args.seed})")
    model, losses = metric_mod.train_metric(
        args.images, pairs, epochs=args.epochs, seed=args.seed, log=_log
    )
    metric_mod.save_model(model, args.out)
    _log(f"wrote {args.out} (final epoch loss {losses[-1]:.6f})")
    return 0


def _build_metric(args: argparse.Namespace):
    if args.metric == "mse":
        return MseMetric()
    if args.model is None:
        raise ValueError("--model is required with --metric siamese")
    return SiameseMetric(metric_mod.load_model(args.model))


def cmd_search(args: argparse.Namespace) -> int:
    volume = load_volume(args.volume)
    bv = bin_volume(volume)
    target = load_image(args.target)
    metric = _build_metric(args)
    cfg = SearchConfig(
        n_gens=args.gens,
        pop_size=args.pop,
        workers=args.workers,
        rng_seed=args.seed,
        seeded_init=(args.init == "seeded"),
    )
    _log(
        f"searching {args.volume}: pop {cfg.pop_size}, {cfg.n_gens} generations, "
        f"{cfg.workers} worker(s), metric {metric.name}, {args.init} init"
    )

    def progress(gen: int, gen_best: float, global_best: float) -> None:
        _log(f"gen {gen + 1}/{cfg.n_gens}: best {gen_best:.6g} (global {global_best:.6g})")

    best_tf, report = run_search(bv, target, metric, cfg, progress=progress)
    atomic_write_text(args.out, tf_to_json(best_tf))
    if args.report is not None:
        atomic_write_text(args.report, report_to_json(report))
    _log(
        f"best cost {report.best_cost:.6g} found in generation "
        f"{report.best_generation}; wrote {args.out}"
    )
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    volume = load_volume(args.volume)
    with open(args.tf, "r", encoding="utf-8") as f:
        tf = tf_from_json(f.read())
    img = render(bin_volume(volume), tf)
    save_image(img, args.out)
    _log(f"wrote {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    model = metric_mod.load_model(args.model)
    a = resample64(load_image(args.a))
    b = resample64(load_image(args.b))
    print(metric_mod.distance(model, a, b))
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    results = run_suite()
    failed = 0
    for r in results:
        status = "ok" if r.ok else "FAIL"
        _log(f"{status:4s} {r.name}: max rel error {r.max_rel_error:.3e} (< {r.tolerance:g})")
        failed += 0 if r.ok else 1
    return 0 if failed == 0 else 1


def cmd_seed_pop(args: argparse.Namespace) -> int:
    cfg = SeedConfig(pop_size=args.pop)
    pop = seed_population(cfg, np.random.default_rng(args.seed))
    payload = {"version": 1, "chromosomes": [list(c.genes) for c in pop]}
    atomic_write_text(args.out, json.dumps(payload))
    _log(f"wrote {args.out} ({len(pop)} chromosomes)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfq",
        description="Search opacity transfer functions that make a volume "
        "render match a target image.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve-pairs", help="run the pair-labeling backend")
    p.add_argument("--images", required=True, help="corpus directory of PNG images")
    p.add_argument("--out", required=True, help="JSONL pair file to append to")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--seed", type=int, default=None, help="session RNG seed")
    p.add_argument("--ui", default=None, help="built frontend directory to serve at /")
    p.set_defaults(func=cmd_serve_pairs)

    p = sub.add_parser("train", help="train the Siamese metric from labeled pairs")
    p.add_argument("--images", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("search", help="evolve a transfer function toward a target")
    p.add_argument("--volume", required=True, help=".vol dataset")
    p.add_argument("--target", required=True, help="target PNG")
    p.add_argument("--metric", choices=("siamese", "mse"), default="siamese")
    p.add_argument("--model", default=None, help="trained model (siamese metric)")
    p.add_argument("--pop", type=int, default=600)
    p.add_argument("--gens", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("seeded", "random"), default="seeded")
    p.add_argument("--out", required=True, help="best transfer function JSON")
    p.add_argument("--report", default=None, help="run report JSON")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("render", help="render a volume through a transfer function")
    p.add_argument("--volume", required=True)
    p.add_argument("--tf", required=True, help="transfer function JSON")
    p.add_argument("--out", required=True, help="output PNG")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("eval", help="print the metric distance between two images")
    p.add_argument("--model", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="run the finite-difference gradient suite")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("seed-pop", help="write a seeded initial population")
    p.add_argument("--pop", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_seed_pop)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as e:
        _log(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
