"""Rank-aware retrieval evaluation: P@k, R@k, MRR, NDCG@k.

Both systems are evaluated per gold query over the *same* chunk set — the
full-text chunks of the query's analysis — so precision at chunk granularity
compares like for like:

  * "dense"  — first-stage vector retrieval followed by reranking,
  * "bm25"   — the keyword baseline over a per-analysis BM25 index.

Relevance is binary (gold labels are chunk-id sets). P@k divides by k even
when fewer than k results return, so a single relevant item retrieved
anywhere in the top k yields exactly 1/k.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import CorpusStore
from .errors import EmptyRelevantSet, FormatError, MissingIndex, UnknownAnalysis
from .index import TieredIndexSet
from .lexical import Bm25Index, bm25_rank, build_bm25_index
from .pipeline import RetrievalPipeline

DENSE_SYSTEM = "dense"
BM25_SYSTEM = "bm25"
SET_LABELS = ("set1", "set2")
K_VALUES = (1, 3, 5)
NDCG_K_VALUES = (3, 5)

METRIC_NAMES = (
    "P@1", "R@1", "P@3", "R@3", "P@5", "R@5", "MRR", "NDCG@3", "NDCG@5",
)


@dataclass(frozen=True)
class GoldQuery:
    query_id: str
    analysis_id: str
    query_text: str
    relevant_chunk_ids: frozenset[str]
    set_label: str

    def __post_init__(self) -> None:
        if not self.relevant_chunk_ids:
            raise ValueError(f"gold query {self.query_id!r} has no relevant chunks")


def save_gold(queries: Sequence[GoldQuery], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for q in queries:
            record = asdict(q)
            record["relevant_chunk_ids"] = sorted(q.relevant_chunk_ids)
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_gold(path: str | Path) -> list[GoldQuery]:
    queries: list[GoldQuery] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                record["relevant_chunk_ids"] = frozenset(record["relevant_chunk_ids"])
                queries.append(GoldQuery(**record))
            except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: malformed gold record ({exc})") from exc
    return queries


def precision_at_k(ranking: Sequence[str], relevant: frozenset[str] | set[str], k: int) -> float:
    """|top-k ∩ relevant| / k. The denominator is k even when the ranking is
    shorter, so one relevant item within the top 5 scores exactly 0.2."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(set(ranking)) != len(ranking):
        raise ValueError("ranking contains duplicate ids")
    hits = sum(1 for cid in ranking[:k] if cid in relevant)
    return hits / k


def recall_at_k(ranking: Sequence[str], relevant: frozenset[str] | set[str], k: int) -> float:
    if not relevant:
        raise EmptyRelevantSet("recall needs at least one relevant item")
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for cid in ranking[:k] if cid in relevant)
    return hits / len(relevant)


def reciprocal_rank(ranking: Sequence[str], relevant: frozenset[str] | set[str], k: int) -> float:
    """1 / rank of the first relevant item within the top k; 0 if absent."""
    for position, cid in enumerate(ranking[:k], start=1):
        if cid in relevant:
            return 1.0 / position
    return 0.0


def mrr(
    runs: Iterable[tuple[Sequence[str], frozenset[str] | set[str]]], k: int
) -> float:
    total = 0.0
    count = 0
    for ranking, relevant in runs:
        total += reciprocal_rank(ranking, relevant, k)
        count += 1
    if count == 0:
        raise ValueError("mrr needs at least one query")
    return total / count


def ndcg_at_k(ranking: Sequence[str], relevant: frozenset[str] | set[str], k: int) -> float:
    """Binary-gain NDCG: DCG@k = Σ rel_i / log2(i + 1), normalized by the
    ideal ordering of the relevant set truncated at k."""
    if not relevant:
        raise EmptyRelevantSet("ndcg needs at least one relevant item")
    if k < 1:
        raise ValueError("k must be >= 1")
    dcg = sum(
        1.0 / math.log2(position + 1)
        for position, cid in enumerate(ranking[:k], start=1)
        if cid in relevant
    )
    ideal_hits = min(k, len(relevant))
    idcg = sum(1.0 / math.log2(position + 1) for position in range(1, ideal_hits + 1))
    return dcg / idcg


def query_metrics(ranking: Sequence[str], relevant: frozenset[str] | set[str]) -> dict[str, float]:
    """All reported metrics for a single query's ranking."""
    values: dict[str, float] = {}
    for k in K_VALUES:
        values[f"P@{k}"] = precision_at_k(ranking, relevant, k)
        values[f"R@{k}"] = recall_at_k(ranking, relevant, k)
    values["MRR"] = reciprocal_rank(ranking, relevant, max(K_VALUES))
    for k in NDCG_K_VALUES:
        values[f"NDCG@{k}"] = ndcg_at_k(ranking, relevant, k)
    return values


@dataclass(frozen=True)
class QueryResult:
    query_id: str
    set_label: str
    system: str
    ranking: tuple[str, ...]
    metrics: dict[str, float]


class MetricsReport:
    """Per-query metric rows plus per-(system, set) mean aggregates."""

    def __init__(self, rows: Sequence[QueryResult]):
        self.rows = list(rows)
        self._aggregates: dict[tuple[str, str], dict[str, float]] = {}
        groups: dict[tuple[str, str], list[QueryResult]] = {}
        for row in self.rows:
            groups.setdefault((row.system, row.set_label), []).append(row)
        for key, members in groups.items():
            self._aggregates[key] = {
                name: sum(m.metrics[name] for m in members) / len(members)
                for name in METRIC_NAMES
            }

    @property
    def systems(self) -> list[str]:
        return sorted({row.system for row in self.rows})

    @property
    def set_labels(self) -> list[str]:
        return sorted({row.set_label for row in self.rows})

    def aggregate(self, system: str, set_label: str) -> dict[str, float]:
        return dict(self._aggregates[(system, set_label)])

    def to_dict(self) -> dict:
        return {
            "aggregates": {
                system: {
                    set_label: self._aggregates[(system, set_label)]
                    for set_label in self.set_labels
                    if (system, set_label) in self._aggregates
                }
                for system in self.systems
            },
            "per_query": [asdict(row) for row in self.rows],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricsReport":
        rows = [
            QueryResult(
                query_id=row["query_id"],
                set_label=row["set_label"],
                system=row["system"],
                ranking=tuple(row["ranking"]),
                metrics=dict(row["metrics"]),
            )
            for row in data["per_query"]
        ]
        return cls(rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetricsReport):
            return NotImplemented
        return self.rows == other.rows


def build_bm25_indexes(store: CorpusStore) -> dict[str, Bm25Index]:
    """One BM25 index per analysis, over exactly that analysis's chunks."""
    indexes: dict[str, Bm25Index] = {}
    for analysis_id in store.analyses:
        chunks = store.chunks_for_analysis(analysis_id)
        indexes[analysis_id] = build_bm25_index(
            {c.chunk_id: c.text for c in chunks},
            analysis_by_chunk={c.chunk_id: c.analysis_id for c in chunks},
        )
    return indexes


def run_eval(
    store: CorpusStore,
    tiered: TieredIndexSet,
    bm25_indexes: Mapping[str, Bm25Index],
    gold: Sequence[GoldQuery],
    pipeline: RetrievalPipeline,
) -> MetricsReport:
    """Evaluate the dense two-stage pipeline and the BM25 baseline over a
    gold set. Deterministic given stub model boundaries."""
    if not gold:
        raise ValueError("gold set is empty")
    depth = max(max(K_VALUES), pipeline.config.k_final)
    rows: list[QueryResult] = []
    for query in gold:
        if query.analysis_id not in store.analyses:
            raise UnknownAnalysis(f"gold query {query.query_id!r}: {query.analysis_id!r}")
        if query.analysis_id not in tiered.fulltext:
            raise MissingIndex(f"no full-text index for analysis {query.analysis_id!r}")
        if query.analysis_id not in bm25_indexes:
            raise MissingIndex(f"no BM25 index for analysis {query.analysis_id!r}")

        dense_hits = pipeline.rank(query.query_text, tiered.fulltext[query.analysis_id])
        bm25_hits = bm25_rank(bm25_indexes[query.analysis_id], query.query_text, depth)
        for system, hits in ((DENSE_SYSTEM, dense_hits), (BM25_SYSTEM, bm25_hits)):
            ranking = tuple(hit.chunk_id for hit in hits)
            rows.append(
                QueryResult(
                    query_id=query.query_id,
                    set_label=query.set_label,
                    system=system,
                    ranking=ranking,
                    metrics=query_metrics(ranking, query.relevant_chunk_ids),
                )
            )
    return MetricsReport(rows)
