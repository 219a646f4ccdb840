"""Command-line pipeline driver.

Subcommands walk the pipeline over a workspace directory: ``synth``,
``ingest``, ``group``, ``extract``, ``train``, ``tune``, ``fit-mlp``,
``expand``, ``eval``, ``serve``; plus ``demo`` to run everything on a
small synthetic corpus in one go.  Flags can be defaulted through
``SETXPAND_``-prefixed environment variables (e.g. ``SETXPAND_WORKSPACE``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .combiner import MlpTrainConfig
from .contexts import CONTEXT_TYPES, SpConfig, WindowConfig
from .corpus import CorpusFormatError
from .dataset import DatasetError, SynthSpec
from .embeddings import TrainConfig, TrainingError
from .evaluation import EvaluationError
from .expansion import ExpansionError
from . import pipeline
from .pipeline import ALL_METHODS, PipelineError, PipelineProfile, Workspace

ENV_PREFIX = "SETXPAND_"


def _env(name: str, default):
    raw = os.environ.get(ENV_PREFIX + name.upper())
    if raw is None:
        return default
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def _add_workspace(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workspace", "-w", type=Path,
                   default=Path(_env("workspace", "workspace")),
                   help="pipeline workspace directory")


def _types_arg(value: str) -> list[str]:
    if value == "all":
        return list(CONTEXT_TYPES)
    types = value.split(",")
    for t in types:
        if t not in CONTEXT_TYPES:
            raise argparse.ArgumentTypeError(f"unknown context type {t!r}")
    return types


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="setxpand",
                                     description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus + gold lists")
    _add_workspace(p)
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--terms-per-class", type=int, default=20)
    p.add_argument("--sentences", type=int, default=1500)
    p.add_argument("--channels", default="lin,list,dep,sp,up",
                   help="comma list of channels to plant")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=_env("seed", 0))

    p = sub.add_parser("ingest", help="validate the corpus and record statistics")
    _add_workspace(p)
    p.add_argument("--strict", action="store_true", default=_env("strict", False))

    p = sub.add_parser("group", help="build the term variation group table")
    _add_workspace(p)

    p = sub.add_parser("extract", help="extract context pairs")
    _add_workspace(p)
    p.add_argument("--type", type=_types_arg, default=list(CONTEXT_TYPES),
                   help="context types: lin,list,dep,sp,up or 'all'")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--sp-min-support", type=int, default=20)
    p.add_argument("--sp-min-symmetry", type=float, default=0.4)

    p = sub.add_parser("train", help="train embedding models")
    _add_workspace(p)
    p.add_argument("--type", type=_types_arg, default=list(CONTEXT_TYPES))
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--min-pair-count", type=int, default=5)
    p.add_argument("--subsample", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=_env("seed", 1))

    p = sub.add_parser("dataset", help="build the seed-expansion dataset")
    _add_workspace(p)
    p.add_argument("--lists", type=Path, default=None,
                   help="directory of term list files (default workspace/lists)")
    p.add_argument("--redirects", type=Path, default=None)
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument("--split", default=None,
                   help="train/dev/test counts, e.g. 5,5,18")

    p = sub.add_parser("tune", help="grid-search k and k' on the train lists")
    _add_workspace(p)
    p.add_argument("--grid", default="100,250,500,1000")

    p = sub.add_parser("fit-mlp", help="train the MLP combiner (and concat baseline)")
    _add_workspace(p)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument("--no-concat", action="store_true")

    p = sub.add_parser("expand", help="expand a seed set")
    _add_workspace(p)
    p.add_argument("--seed", required=True, help="comma-separated seed terms")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--method", default="mlp",
                   help=f"one of {', '.join(ALL_METHODS)}")
    p.add_argument("--json", action="store_true", help="print the raw response")
    p.add_argument("--features-out", type=Path, default=None,
                   help="also dump the 10-column feature TSV here")

    p = sub.add_parser("eval", help="evaluate methods on the test split")
    _add_workspace(p)
    p.add_argument("--methods", default="all",
                   help="comma list, 'all', or 'gold-echo' for a harness check")
    p.add_argument("--split", default="test", choices=("train", "dev", "test"))

    p = sub.add_parser("serve", help="run the expansion service")
    _add_workspace(p)
    p.add_argument("--port", type=int, default=_env("port", 8000))
    p.add_argument("--host", default=_env("host", "127.0.0.1"))
    p.add_argument("--static", type=Path, default=None,
                   help="directory with the built web UI")

    p = sub.add_parser("demo", help="run the whole pipeline on a tiny synthetic corpus")
    _add_workspace(p)
    p.add_argument("--seed", type=int, default=_env("seed", 0))
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--terms-per-class", type=int, default=14)
    p.add_argument("--sentences", type=int, default=1200)
    return parser


def _cmd_synth(args) -> int:
    ws = Workspace(args.workspace)
    channels = {c: 1.0 for c in args.channels.split(",")}
    spec = SynthSpec(num_classes=args.classes, terms_per_class=args.terms_per_class,
                     sentences=args.sentences, channel_mix=channels,
                     noise=args.noise, rng_seed=args.seed)
    gold = pipeline.run_synth(ws, spec)
    print(f"wrote {ws.corpus_path} and {len(gold)} gold lists")
    return 0


def _cmd_ingest(args) -> int:
    ws = Workspace(args.workspace)
    stats = pipeline.run_ingest(ws, strict=args.strict)
    print(f"sentences={stats.sentences} tokens={stats.tokens} "
          f"chunks={stats.chunks} malformed={stats.malformed}")
    return 0


def _cmd_group(args) -> int:
    ws = Workspace(args.workspace)
    table = pipeline.run_group(ws)
    print(f"built {len(table)} term groups -> {ws.groups_path}")
    return 0


def _cmd_extract(args) -> int:
    ws = Workspace(args.workspace)
    produced = pipeline.run_extract(
        ws, args.type, WindowConfig(args.window),
        SpConfig(min_support=args.sp_min_support, min_symmetry=args.sp_min_symmetry))
    for ctx, n in sorted(produced.items()):
        print(f"{ctx}: {n} distinct pairs")
    return 0


def _cmd_train(args) -> int:
    ws = Workspace(args.workspace)
    cfg = TrainConfig(dim=args.dim, negatives=args.negatives, epochs=args.epochs,
                      initial_lr=args.lr, subsample_threshold=args.subsample,
                      min_pair_count=args.min_pair_count, rng_seed=args.seed)
    trained = pipeline.run_train(ws, cfg, args.type)
    for ctx, model in sorted(trained.items()):
        print(f"{ctx}: {len(model)} terms x {model.vectors.shape[1]} dims")
    return 0


def _cmd_dataset(args) -> int:
    ws = Workspace(args.workspace)
    lists_dir = args.lists or (ws.root / "lists")
    raw_lists = pipeline.load_lists_dir(lists_dir)
    if not raw_lists:
        print(f"no term lists found under {lists_dir}", file=sys.stderr)
        return 1
    redirects = {}
    if args.redirects and Path(args.redirects).is_file():
        for line in Path(args.redirects).read_text(encoding="utf-8").splitlines():
            if line:
                src, dst = line.split("\t")
                redirects[src] = dst
    split = tuple(int(x) for x in args.split.split(",")) if args.split else None
    bundle = pipeline.run_dataset(ws, raw_lists, redirects, args.seed, split)
    sizes = {s: len(bundle.by_split(s)) for s in ("train", "dev", "test")}
    print(f"dataset: {sizes['train']}/{sizes['dev']}/{sizes['test']} lists "
          f"-> {ws.dataset_dir}")
    for w in bundle.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_tune(args) -> int:
    ws = Workspace(args.workspace)
    grid = tuple(int(x) for x in args.grid.split(","))
    tuned = pipeline.run_tune(ws, grid)
    for ctx, p in sorted(tuned.items()):
        print(f"{ctx}: k={p.k} k'={p.k_prime}")
    return 0


def _cmd_fit_mlp(args) -> int:
    ws = Workspace(args.workspace)
    cfg = MlpTrainConfig(epochs=args.epochs, lr=args.lr, batch=args.batch,
                         seed=args.seed)
    pipeline.run_fit_mlp(ws, cfg, with_concat=not args.no_concat)
    print(f"wrote {ws.mlp_path}")
    return 0


def _cmd_expand(args) -> int:
    seeds = [s.strip() for s in args.seed.split(",") if s.strip()]
    if not seeds:
        print("error: empty seed set", file=sys.stderr)
        return 2
    ws = Workspace(args.workspace)
    engine = pipeline.ExpansionEngine.from_workspace(ws)
    if args.method not in engine.methods():
        print(f"error: unknown method {args.method!r} "
              f"(available: {', '.join(engine.methods())})", file=sys.stderr)
        return 2
    result = engine.expand(seeds, args.top, args.method)
    if args.features_out:
        from . import expansion

        seed = engine.resolve_seed(seeds)
        features = expansion.build_features(engine.models, seed, engine.params)
        expansion.save_features(features, args.features_out, engine.table)
    if args.json:
        print(json.dumps(result, indent=2))
        return 0
    if result["unresolved"]:
        print(f"unresolved: {', '.join(result['unresolved'])}", file=sys.stderr)
    for i, cand in enumerate(result["candidates"], 1):
        print(f"{i}\t{cand['term']}\t{cand['score']:.4f}")
    return 0


def _cmd_eval(args) -> int:
    ws = Workspace(args.workspace)
    if args.methods == "all":
        methods = list(ALL_METHODS)
    else:
        methods = args.methods.split(",")
        unknown = [m for m in methods if m not in ALL_METHODS + ("gold-echo",)]
        if unknown:
            print(f"error: unknown methods {unknown}", file=sys.stderr)
            return 2
    reports = pipeline.run_eval(ws, methods, split=args.split)
    print((ws.reports_dir / "comparison.txt").read_text(encoding="utf-8"))
    for method in sorted(reports):
        print(f"report written: {ws.reports_dir / (method + '.tsv')}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    ws = Workspace(args.workspace)
    engine = pipeline.ExpansionEngine.from_workspace(ws)
    app = create_app(engine, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_demo(args) -> int:
    ws = Workspace(args.workspace)
    profile = PipelineProfile(
        synth=SynthSpec(num_classes=args.classes,
                        terms_per_class=args.terms_per_class,
                        sentences=args.sentences, rng_seed=args.seed),
        train=TrainConfig(dim=32, epochs=20, initial_lr=0.05, min_pair_count=1,
                          subsample_threshold=0.0, rng_seed=args.seed + 1),
        mlp=MlpTrainConfig(seed=args.seed),
        dataset_seed=args.seed,
    )
    pipeline.run_end_to_end(ws, profile)
    print(f"demo workspace ready under {ws.root}")
    print("try: setxpand expand -w", ws.root, "--seed "
          f"\"{_demo_seed_hint(ws)}\" --top 10")
    return 0


def _demo_seed_hint(ws: Workspace) -> str:
    lists = pipeline.load_lists_dir(ws.root / "lists")
    first = lists[sorted(lists)[0]]
    return ",".join(first[:2])


_COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "group": _cmd_group,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "dataset": _cmd_dataset,
    "tune": _cmd_tune,
    "fit-mlp": _cmd_fit_mlp,
    "expand": _cmd_expand,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "demo": _cmd_demo,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (PipelineError, CorpusFormatError, DatasetError, TrainingError,
            ExpansionError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
