"""Pipeline stages over a workspace directory.

Each stage reads its inputs from the workspace, writes one artifact plus a
manifest (config hash + input fingerprints), and is byte-reproducible
given identical inputs and seeds.  Layout::

    workspace/
      corpus.txt            annotated corpus
      ingest.json           corpus statistics
      groups.tsv            term-group table
      pairs/<ctx>.tsv       aggregated pair streams
      patterns.tsv          retained symmetric patterns
      models/<ctx>.txt      embedding models (+ .meta.json)
      dataset/              seed-expansion dataset bundle
      params.json           tuned k / k' per context type
      mlp.json concat.json  classifier parameters
      reports/              evaluation output
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import combiner, contexts, corpus, dataset, embeddings, evaluation, expansion
from .combiner import MlpParams, MlpTrainConfig, TrainingExample
from .contexts import CONTEXT_TYPES, SpConfig, WindowConfig
from .corpus import IngestConfig, TermGroupTable
from .dataset import DatasetBundle, SynthSpec, config_hash
from .embeddings import EmbeddingModel, TrainConfig
from .expansion import METHODS, ScoringParams, SeedSet

SINGLE_METHODS = tuple(f"{ctx}-{m}" for ctx in CONTEXT_TYPES for m in METHODS)
ALL_METHODS = SINGLE_METHODS + ("mlp", "concat")
TUNING_GRID = (100, 250, 500, 1000)


class PipelineError(Exception):
    pass


def _as_probability(logit: float) -> float:
    if logit >= 0:
        return 1.0 / (1.0 + float(np.exp(-logit)))
    e = float(np.exp(logit))
    return e / (1.0 + e)


def _file_hash(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def write_manifest(ws: "Workspace", stage: str, config: dict,
                   inputs: Sequence[Path], outputs: Sequence[Path]) -> None:
    manifest = {
        "stage": stage,
        "config": config,
        "config_hash": config_hash(config),
        "inputs": {str(p.relative_to(ws.root)): _file_hash(p)
                   for p in inputs if p.is_file()},
        "outputs": [str(p.relative_to(ws.root)) for p in outputs],
    }
    path = ws.root / f"{stage}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
                    encoding="utf-8")


class Workspace:
    """Filesystem layout plus lazy, cached artifact loading."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._table: Optional[TermGroupTable] = None
        self._models: Optional[dict[str, EmbeddingModel]] = None

    # paths ------------------------------------------------------------------
    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.txt"

    @property
    def groups_path(self) -> Path:
        return self.root / "groups.tsv"

    def pairs_path(self, ctx: str) -> Path:
        return self.root / "pairs" / f"{ctx}.tsv"

    @property
    def patterns_path(self) -> Path:
        return self.root / "patterns.tsv"

    def model_path(self, ctx: str) -> Path:
        return self.root / "models" / f"{ctx}.txt"

    @property
    def dataset_dir(self) -> Path:
        return self.root / "dataset"

    @property
    def params_path(self) -> Path:
        return self.root / "params.json"

    @property
    def mlp_path(self) -> Path:
        return self.root / "mlp.json"

    @property
    def concat_path(self) -> Path:
        return self.root / "concat.json"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    # cached loads -------------------------------------------------------------
    def table(self) -> TermGroupTable:
        if self._table is None:
            if not self.groups_path.is_file():
                raise PipelineError("run the group stage first (groups.tsv missing)")
            self._table = TermGroupTable.load(self.groups_path)
        return self._table

    def models(self) -> dict[str, EmbeddingModel]:
        if self._models is None:
            self._models = {}
            for ctx in CONTEXT_TYPES:
                path = self.model_path(ctx)
                if path.is_file():
                    self._models[ctx] = EmbeddingModel.load(path, self.table())
            if not self._models:
                raise PipelineError("no trained model found (run the train stage)")
        return self._models

    def params(self) -> dict[str, ScoringParams]:
        if self.params_path.is_file():
            data = json.loads(self.params_path.read_text(encoding="utf-8"))
            return {ctx: ScoringParams(v["k"], v["k_prime"])
                    for ctx, v in data.items()}
        return {ctx: ScoringParams() for ctx in CONTEXT_TYPES}

    def mlp(self) -> MlpParams:
        if not self.mlp_path.is_file():
            raise PipelineError("run fit-mlp first (mlp.json missing)")
        return MlpParams.load(self.mlp_path)

    def concat(self) -> Optional[MlpParams]:
        if self.concat_path.is_file():
            return MlpParams.load(self.concat_path)
        return None

    def bundle(self) -> DatasetBundle:
        return DatasetBundle.load(self.dataset_dir, self.table())

    def invalidate(self) -> None:
        self._table = None
        self._models = None


# --- stages -------------------------------------------------------------------


def run_ingest(ws: Workspace, strict: bool = False) -> corpus.CorpusStats:
    reader = corpus.ingest_corpus(ws.corpus_path, IngestConfig(strict=strict))
    stats = reader.stats
    out = ws.root / "ingest.json"
    out.write_text(json.dumps(asdict(stats), indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    write_manifest(ws, "ingest", {"strict": strict}, [ws.corpus_path], [out])
    return stats


def run_group(ws: Workspace, config: Optional[corpus.GroupingConfig] = None) -> TermGroupTable:
    reader = corpus.ingest_corpus(ws.corpus_path)
    frequencies = corpus.count_chunk_surfaces(reader)
    table = corpus.group_term_variations(dict(frequencies), config=config)
    table.save(ws.groups_path)
    write_manifest(ws, "group", asdict(config or corpus.GroupingConfig()),
                   [ws.corpus_path], [ws.groups_path])
    ws.invalidate()
    return table


def run_extract(ws: Workspace, types: Sequence[str] = CONTEXT_TYPES,
                window: WindowConfig = WindowConfig(),
                sp_config: SpConfig = SpConfig()) -> dict[str, int]:
    """Extract and aggregate pair streams for the requested context types."""
    table = ws.table()
    reader = corpus.ingest_corpus(ws.corpus_path)
    (ws.root / "pairs").mkdir(exist_ok=True)

    sentences = list(reader)
    sequences = [corpus.sentence_units(s, table, i) for i, s in enumerate(sentences)]

    produced: dict[str, int] = {}
    outputs: list[Path] = []

    def emit(ctx: str, pairs: Iterable[contexts.ContextPair]) -> None:
        counts = contexts.aggregate_pairs(pairs)
        contexts.save_pairs(counts, ws.pairs_path(ctx), table)
        produced[ctx] = len(counts)
        outputs.append(ws.pairs_path(ctx))

    if "lin" in types:
        emit("lin", (p for seq in sequences
                     for p in contexts.extract_linear(seq, table, window)))
    if "list" in types:
        lists = contexts.detect_explicit_lists(sentences, table)
        emit("list", contexts.extract_list_pairs(lists, table))
    if "dep" in types:
        emit("dep", (p for sent in sentences
                     for p in contexts.extract_dependency(sent, table)))
    if "sp" in types:
        patterns = contexts.discover_symmetric_patterns(sequences, sp_config)
        contexts.save_patterns(patterns, ws.patterns_path)
        outputs.append(ws.patterns_path)
        emit("sp", contexts.extract_sp_pairs(sequences, patterns, table))
    if "up" in types:
        emit("up", (p for seq in sequences
                    for p in contexts.extract_unary_patterns(seq, table)))

    # Unseen chunk surfaces may have been added as singleton groups.
    if len(table) != len(TermGroupTable.load(ws.groups_path)):
        table.save(ws.groups_path)

    write_manifest(ws, "extract",
                   {"types": list(types), "window": asdict(window),
                    "sp": asdict(sp_config)},
                   [ws.corpus_path, ws.groups_path], outputs)
    return produced


def run_train(ws: Workspace, cfg: TrainConfig | Mapping[str, TrainConfig],
              types: Sequence[str] = CONTEXT_TYPES) -> dict[str, EmbeddingModel]:
    table = ws.table()
    (ws.root / "models").mkdir(exist_ok=True)
    configs = cfg if isinstance(cfg, Mapping) else {ctx: cfg for ctx in types}
    trained: dict[str, EmbeddingModel] = {}
    outputs = []
    for ctx in types:
        path = ws.pairs_path(ctx)
        if not path.is_file():
            continue
        ctx_cfg = configs.get(ctx)
        if ctx_cfg is None:
            continue
        pairs = contexts.load_pairs(path, table)
        if not any(n >= ctx_cfg.min_pair_count for _, _, n in pairs):
            continue  # channel produced nothing trainable
        model = embeddings.train(pairs, ctx_cfg, context_type=ctx,
                                 corpus_fingerprint=_file_hash(path))
        model.save(ws.model_path(ctx), table)
        trained[ctx] = model
        outputs.append(ws.model_path(ctx))
    if not trained:
        raise PipelineError("no context type had a trainable pair stream")
    write_manifest(ws, "train",
                   {"config": {ctx: asdict(c) for ctx, c in configs.items()},
                    "types": list(types)},
                   [ws.pairs_path(c) for c in types], outputs)
    ws.invalidate()
    return trained


def run_synth(ws: Workspace, spec: SynthSpec) -> dict[str, list[str]]:
    corpus_path, gold = dataset.generate_synthetic_corpus(spec, ws.root)
    write_manifest(ws, "synth", asdict(spec), [], [corpus_path])
    return gold


def run_dataset(ws: Workspace, raw_lists: Mapping[str, Sequence[str]],
                redirect_table: Optional[Mapping[str, str]] = None,
                rng_seed: int = 0,
                split_counts: Optional[tuple[int, int, int]] = None) -> DatasetBundle:
    bundle = dataset.build_dataset(raw_lists, ws.table(), redirect_table,
                                   rng_seed, split_counts)
    config = {"rng_seed": rng_seed, "split_counts": split_counts,
              "lists": sorted(raw_lists)}
    bundle.save(ws.dataset_dir, ws.table(), redirect_table, config)
    write_manifest(ws, "dataset", config, [ws.groups_path],
                   [ws.dataset_dir / "manifest.json"])
    return bundle


def load_lists_dir(path: Path | str) -> dict[str, list[str]]:
    lists = {}
    for file in sorted(Path(path).glob("*.txt")):
        lines = [line for line in file.read_text(encoding="utf-8").splitlines() if line]
        lists[file.stem] = lines
    return lists


# --- expansion engine -----------------------------------------------------------


class ExpansionEngine:
    """Read-only scoring facade over trained models and classifier params."""

    def __init__(self, models: Mapping[str, EmbeddingModel], table: TermGroupTable,
                 params: Mapping[str, ScoringParams],
                 mlp: Optional[MlpParams] = None,
                 concat: Optional[MlpParams] = None):
        self.models = dict(models)
        self.table = table
        self.params = dict(params)
        self.mlp_params = mlp
        self.concat_params = concat

    @classmethod
    def from_workspace(cls, ws: Workspace) -> "ExpansionEngine":
        mlp = MlpParams.load(ws.mlp_path) if ws.mlp_path.is_file() else None
        return cls(ws.models(), ws.table(), ws.params(), mlp, ws.concat())

    def methods(self) -> list[str]:
        out = list(SINGLE_METHODS)
        if self.mlp_params is not None:
            out.append("mlp")
        if self.concat_params is not None:
            out.append("concat")
        return out

    def resolve_seed(self, strings: Sequence[str]) -> SeedSet:
        return expansion.resolve_seed(strings, self.table, self.models)

    def seed_from_ids(self, ids: Sequence[int]) -> SeedSet:
        usable = tuple(g for g in ids if any(g in m for m in self.models.values()))
        if not usable:
            raise expansion.ExpansionError("no seed id present in any model")
        return SeedSet(usable)

    def raw_scores(self, seed: SeedSet) -> dict[str, dict[int, float]]:
        return expansion.score_all(self.models, seed, self.params)

    def rank(self, seed: SeedSet, method: str, n: int,
             scores: Optional[dict[str, dict[int, float]]] = None,
             ) -> list[tuple[int, float]]:
        """Ranked (group id, score) for any method name."""
        if method in SINGLE_METHODS:
            ctx, m = method.split("-")
            if scores is not None:
                return expansion.rank_raw_scores(scores[f"{ctx}_{m}"], n)
            return expansion.rank_by_single(self.models, seed, ctx, m,
                                            self.params, n)
        if method == "mlp":
            if self.mlp_params is None:
                raise PipelineError("mlp parameters not fitted")
            scores = scores or self.raw_scores(seed)
            features = expansion.features_from_scores(scores)
            return combiner.rank_candidates(self.mlp_params, features, n)
        if method == "concat":
            if self.concat_params is None:
                raise PipelineError("concat parameters not fitted")
            scores = scores or self.raw_scores(seed)
            universe = sorted({g for col in scores.values() for g in col})
            ranked = [(g, combiner.mlp_logit(
                self.concat_params, combiner.concat_input(self.models, seed, g)))
                for g in universe]
            ranked.sort(key=lambda kv: (-kv[1], kv[0]))
            return [(g, _as_probability(logit)) for g, logit in ranked[:n]]
        raise PipelineError(f"unknown method {method!r}")

    def expand(self, seed_strings: Sequence[str], top_n: int,
               method: str = "mlp") -> dict:
        """Structured expansion result for the CLI and the service."""
        seed = self.resolve_seed(seed_strings)
        scores = self.raw_scores(seed)
        features = expansion.features_from_scores(scores)
        by_gid = {fv.candidate: fv.features for fv in features}
        ranked = self.rank(seed, method, top_n, scores=scores)
        return {
            "method": method,
            "seed": [self.table.canonical(g) for g in seed.terms],
            "unresolved": list(seed.unresolved),
            "candidates": [
                {"term": self.table.canonical(g), "score": float(s),
                 "features": [float(x) for x in by_gid.get(g, (0.0,) * 10)]}
                for g, s in ranked
            ],
        }


def _labeled_examples(engine: ExpansionEngine, bundle: DatasetBundle,
                      ) -> tuple[list[TrainingExample], list[tuple[SeedSet, int, int]]]:
    """Feature examples and (seed, candidate, label) triples from train lists."""
    examples: list[TrainingExample] = []
    triples: list[tuple[SeedSet, int, int]] = []
    for tl in sorted(bundle.by_split("train"), key=lambda t: t.name):
        for sample in bundle.samples[tl.name]:
            try:
                seed = engine.seed_from_ids(sample.seed)
            except expansion.ExpansionError:
                continue
            labeled = [(g, 1) for g in sorted(sample.expanded_gold)]
            labeled += [(g, 0) for g in sorted(sample.negatives)]
            if not labeled:
                continue
            scores = engine.raw_scores(seed)
            features = expansion.features_from_scores(
                scores, extra_candidates=[g for g, _ in labeled])
            by_gid = {fv.candidate: fv.features for fv in features}
            for gid, label in labeled:
                examples.append(TrainingExample(
                    by_gid[gid], label, provenance=(tl.name, sample.sample_id, gid)))
                triples.append((seed, gid, label))
    return examples, triples


def run_fit_mlp(ws: Workspace, cfg: MlpTrainConfig = MlpTrainConfig(),
                with_concat: bool = True,
                concat_cfg: Optional[MlpTrainConfig] = None) -> MlpParams:
    engine = ExpansionEngine(ws.models(), ws.table(), ws.params())
    bundle = ws.bundle()
    examples, triples = _labeled_examples(engine, bundle)
    if not examples:
        raise PipelineError("train split produced no labeled examples")
    params, losses = combiner.mlp_train(examples, cfg)
    params.save(ws.mlp_path)
    loss_path = ws.root / "mlp_loss.tsv"
    loss_path.write_text("".join(f"{i}\t{loss:.6f}\n"
                                 for i, loss in enumerate(losses)), encoding="utf-8")
    outputs = [ws.mlp_path, loss_path]
    if with_concat:
        ccfg = concat_cfg or MlpTrainConfig(epochs=max(50, cfg.epochs // 3),
                                            lr=cfg.lr, batch=cfg.batch,
                                            seed=cfg.seed, activation=cfg.activation)
        cparams, _ = combiner.concat_baseline_train(engine.models, triples, ccfg)
        cparams.save(ws.concat_path)
        outputs.append(ws.concat_path)
    write_manifest(ws, "fit-mlp", {"config": asdict(cfg), "with_concat": with_concat},
                   [ws.groups_path], outputs)
    return params


def run_tune(ws: Workspace, grid: Sequence[int] = TUNING_GRID,
             n: int = 10) -> dict[str, ScoringParams]:
    """Grid-search k (centroid) and k' (CombSUM) per context type,
    maximizing MAP@n over the train-split seed samples."""
    table = ws.table()
    models = ws.models()
    bundle = ws.bundle()
    tuned: dict[str, dict[str, int]] = {}
    for ctx in CONTEXT_TYPES:
        if ctx not in models:
            tuned[ctx] = {"k": grid[0], "k_prime": grid[0]}
            continue
        best = {}
        for method, key in (("cent", "k"), ("csum", "k_prime")):
            scored = []
            for value in grid:
                params = {ctx: ScoringParams(k=value, k_prime=value)}
                engine = ExpansionEngine(models, table, params)

                def expander(seed_ids, n_max, _engine=engine, _ctx=ctx, _m=method):
                    seed = _engine.seed_from_ids(seed_ids)
                    return [g for g, _ in _engine.rank(seed, f"{_ctx}-{_m}", n_max)]

                try:
                    report = evaluation.evaluate_method(expander, bundle, (n,),
                                                        split="train")
                    scored.append((report.map_at(n), -value))
                except (evaluation.EvaluationError, expansion.ExpansionError):
                    scored.append((0.0, -value))
            best_map, neg_value = max(scored)
            best[key] = -neg_value
        tuned[ctx] = best
    ws.params_path.write_text(json.dumps(tuned, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    write_manifest(ws, "tune", {"grid": list(grid), "n": n},
                   [ws.groups_path], [ws.params_path])
    return {ctx: ScoringParams(v["k"], v["k_prime"]) for ctx, v in tuned.items()}


def evaluate_all_methods(engine: ExpansionEngine, bundle: DatasetBundle,
                         methods: Sequence[str],
                         n_values: Sequence[int] = evaluation.DEFAULT_N_VALUES,
                         split: str = "test") -> dict[str, evaluation.EvalReport]:
    """Evaluate many methods in one pass, computing raw scores once per sample."""
    reports = {m: evaluation.EvalReport(n_values=tuple(n_values)) for m in methods}
    n_max = max(n_values)
    for tl in sorted(bundle.by_split(split), key=lambda t: t.name):
        for sample in bundle.samples[tl.name]:
            if not sample.expanded_gold:
                continue
            try:
                seed = engine.seed_from_ids(sample.seed)
            except expansion.ExpansionError:
                continue
            scores = engine.raw_scores(seed)
            for method in methods:
                if method == "gold-echo":
                    ranked: Sequence[int] = sorted(sample.expanded_gold)
                else:
                    ranked = [g for g, _ in engine.rank(seed, method, n_max,
                                                        scores=scores)]
                ap = {n: evaluation.average_precision_at_n(
                    ranked, sample.expanded_gold, n) for n in n_values}
                reports[method].results.append(evaluation.QueryResult(
                    tl.name, sample.sample_id, len(sample.seed), ap))
    return reports


def run_eval(ws: Workspace, methods: Sequence[str] = ALL_METHODS,
             n_values: Sequence[int] = evaluation.DEFAULT_N_VALUES,
             split: str = "test") -> dict[str, evaluation.EvalReport]:
    engine = ExpansionEngine.from_workspace(ws)
    methods = [m for m in methods
               if m in ("gold-echo",) or m in engine.methods()]
    bundle = ws.bundle()
    reports = evaluate_all_methods(engine, bundle, methods, n_values, split)
    ws.reports_dir.mkdir(exist_ok=True)
    outputs = []
    for method, report in reports.items():
        path = ws.reports_dir / f"{method}.tsv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("list\tsample\tseed_size\tn\tap\n")
            for row in report.to_rows():
                fh.write("\t".join(str(x) for x in row) + "\n")
        outputs.append(path)
    singles = {m: r for m, r in reports.items() if m in SINGLE_METHODS}
    table_path = ws.reports_dir / "comparison.txt"
    lines = []
    for size in (None, 2, 5, 10):
        label = "all sizes" if size is None else f"{size} seeds"
        try:
            lines.append(f"== {label} ==")
            lines.append(evaluation.format_comparison(reports, n_values, size))
        except evaluation.EvaluationError:
            lines.pop()
    table_path.write_text("\n".join(lines), encoding="utf-8")
    outputs.append(table_path)
    write_manifest(ws, "eval", {"methods": list(methods), "n": list(n_values),
                                "split": split},
                   [ws.groups_path], outputs)
    return reports


# --- composition ---------------------------------------------------------------


@dataclass
class PipelineProfile:
    """One coherent set of stage configs for an end-to-end run.

    The desk-scale defaults differ from the module defaults on purpose:
    sparse clean pair streams (lists, patterns) train without subsampling
    and with more epochs, while the dense window stream keeps subsampling
    to damp ubiquitous punctuation contexts.
    """

    synth: SynthSpec = field(default_factory=SynthSpec)
    window: WindowConfig = field(default_factory=WindowConfig)
    sp: SpConfig = field(default_factory=lambda: SpConfig(min_support=10))
    train: TrainConfig = field(default_factory=lambda: TrainConfig(
        dim=32, epochs=20, initial_lr=0.05, min_pair_count=1,
        subsample_threshold=0.0))
    train_overrides: dict[str, dict] = field(default_factory=lambda: {
        "lin": {"subsample_threshold": 1e-4},
        "sp": {"epochs": 40, "initial_lr": 0.1},
    })
    scoring_k: int = 100
    mlp: MlpTrainConfig = field(default_factory=MlpTrainConfig)
    dataset_seed: int = 0
    split_counts: Optional[tuple[int, int, int]] = None

    def train_configs(self) -> dict[str, TrainConfig]:
        from dataclasses import replace
        out = {}
        for ctx in CONTEXT_TYPES:
            out[ctx] = replace(self.train, **self.train_overrides.get(ctx, {}))
        return out


def run_end_to_end(ws: Workspace, profile: PipelineProfile,
                   fit_classifiers: bool = True,
                   with_concat: bool = True) -> ExpansionEngine:
    """Synthesize, ingest, group, extract, train, build dataset, fit MLP."""
    run_synth(ws, profile.synth)
    run_ingest(ws)
    run_group(ws)
    run_extract(ws, CONTEXT_TYPES, profile.window, profile.sp)
    run_train(ws, profile.train_configs())
    params = {ctx: ScoringParams(profile.scoring_k, profile.scoring_k)
              for ctx in CONTEXT_TYPES}
    ws.params_path.write_text(json.dumps(
        {ctx: {"k": p.k, "k_prime": p.k_prime} for ctx, p in params.items()},
        indent=2, sort_keys=True) + "\n", encoding="utf-8")
    raw_lists = load_lists_dir(ws.root / "lists")
    run_dataset(ws, raw_lists, rng_seed=profile.dataset_seed,
                split_counts=profile.split_counts)
    if fit_classifiers:
        run_fit_mlp(ws, profile.mlp, with_concat=with_concat)
    return ExpansionEngine.from_workspace(ws)
