"""Ranking evaluation: MAP@n over seed-expansion queries.

A ranked candidate matches a gold term when both map to the same term
variation group (ranking and gold both carry group ids, so matching is id
equality).  AP@n uses min(|gold|, n) as denominator so a perfect top-n
list scores 1.0 even when the gold set is larger than n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import pstdev
from typing import Callable, Iterable, Mapping, Sequence

from .dataset import DatasetBundle

DEFAULT_N_VALUES = (10, 20, 50)

# expander(seed ids, n) -> ranked candidate group ids
Expander = Callable[[tuple[int, ...], int], Sequence[int]]


class EvaluationError(Exception):
    pass


def average_precision_at_n(ranked: Sequence[int], gold: Iterable[int], n: int) -> float:
    """AP@n = sum of precision at relevant ranks / min(|gold|, n).

    Duplicate group entries in the ranking are collapsed to their first
    occurrence before scoring; an empty gold set is an error.
    """
    gold = set(gold)
    if not gold:
        raise EvaluationError("empty gold set")
    if n < 1:
        raise EvaluationError("n must be >= 1")
    seen = set()
    deduped = []
    for gid in ranked:
        if gid not in seen:
            seen.add(gid)
            deduped.append(gid)
    hits = 0
    precision_sum = 0.0
    for rank, gid in enumerate(deduped[:n], start=1):
        if gid in gold:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / min(len(gold), n)


@dataclass(frozen=True)
class QueryResult:
    list_name: str
    sample_id: int
    seed_size: int
    ap: dict[int, float]  # n -> AP@n


@dataclass
class EvalReport:
    """Per-query APs plus aggregated MAP@n overall, per seed size and per list."""

    results: list[QueryResult] = field(default_factory=list)
    n_values: tuple[int, ...] = DEFAULT_N_VALUES

    def _select(self, seed_size: int | None = None,
                list_name: str | None = None) -> list[QueryResult]:
        out = self.results
        if seed_size is not None:
            out = [r for r in out if r.seed_size == seed_size]
        if list_name is not None:
            out = [r for r in out if r.list_name == list_name]
        return out

    def map_at(self, n: int, seed_size: int | None = None) -> float:
        rows = self._select(seed_size)
        if not rows:
            raise EvaluationError("no queries evaluated")
        return sum(r.ap[n] for r in rows) / len(rows)

    def list_names(self) -> list[str]:
        return sorted({r.list_name for r in self.results})

    def per_list_map(self, n: int, seed_size: int | None = None) -> dict[str, float]:
        out = {}
        for name in self.list_names():
            rows = self._select(seed_size, name)
            if rows:
                out[name] = sum(r.ap[n] for r in rows) / len(rows)
        return out

    def stdev_across_lists(self, n: int, seed_size: int | None = None) -> float:
        values = list(self.per_list_map(n, seed_size).values())
        return pstdev(values) if len(values) > 1 else 0.0

    def to_rows(self) -> list[tuple]:
        rows = []
        for r in sorted(self.results, key=lambda q: (q.list_name, q.sample_id)):
            for n in self.n_values:
                rows.append((r.list_name, r.sample_id, r.seed_size, n, r.ap[n]))
        return rows


def evaluate_method(expander: Expander, bundle: DatasetBundle,
                    n_values: Sequence[int] = DEFAULT_N_VALUES,
                    split: str = "test") -> EvalReport:
    """Run every seed sample of a split through the expander."""
    report = EvalReport(n_values=tuple(n_values))
    n_max = max(n_values)
    for tl in sorted(bundle.by_split(split), key=lambda t: t.name):
        for sample in bundle.samples[tl.name]:
            if not sample.expanded_gold:
                continue
            ranked = list(expander(sample.seed, n_max))
            ap = {n: average_precision_at_n(ranked, sample.expanded_gold, n)
                  for n in n_values}
            report.results.append(QueryResult(tl.name, sample.sample_id,
                                              len(sample.seed), ap))
    return report


def oracle_map(reports: Mapping[str, EvalReport], n: int,
               seed_size: int | None = None) -> float:
    """Mean over lists of the best per-list MAP@n across all methods."""
    if not reports:
        raise EvaluationError("no reports given")
    per_list: dict[str, float] = {}
    for report in reports.values():
        for name, value in report.per_list_map(n, seed_size).items():
            per_list[name] = max(per_list.get(name, 0.0), value)
    if not per_list:
        raise EvaluationError("reports contain no evaluated lists")
    return sum(per_list.values()) / len(per_list)


def best_context_share(reports: Mapping[str, EvalReport], n: int = 10,
                       seed_size: int | None = None) -> dict[str, float]:
    """Fraction of lists on which each method attains the maximum MAP@n.

    Ties count for every tied method, so shares may sum to more than 1.
    """
    per_method = {m: r.per_list_map(n, seed_size) for m, r in reports.items()}
    names = sorted({name for by_list in per_method.values() for name in by_list})
    if not names:
        raise EvaluationError("reports contain no evaluated lists")
    wins = {m: 0 for m in per_method}
    for name in names:
        best = max(by_list.get(name, float("-inf"))
                   for by_list in per_method.values())
        for m, by_list in per_method.items():
            if by_list.get(name, float("-inf")) >= best - 1e-12:
                wins[m] += 1
    return {m: w / len(names) for m, w in wins.items()}


def format_comparison(reports: Mapping[str, EvalReport],
                      n_values: Sequence[int] = DEFAULT_N_VALUES,
                      seed_size: int | None = 5) -> str:
    """Human-readable comparison table (MAP@n, stdev@10, best share)."""
    share = best_context_share(reports, 10, seed_size)
    header = ["method"] + [f"MAP@{n}" for n in n_values] + ["stdev@10", "best%"]
    lines = ["\t".join(header)]
    for method in sorted(reports):
        r = reports[method]
        cells = [method]
        cells += [f"{r.map_at(n, seed_size):.3f}" for n in n_values]
        cells.append(f"{r.stdev_across_lists(10, seed_size):.3f}")
        cells.append(f"{100 * share[method]:.0f}")
        lines.append("\t".join(cells))
    try:
        oracle_cells = ["oracle"] + [f"{oracle_map(reports, n, seed_size):.3f}"
                                     for n in n_values] + ["", ""]
        lines.append("\t".join(oracle_cells))
    except EvaluationError:
        pass
    return "\n".join(lines) + "\n"
