import csv
import json

import pytest

from mitra.evalkit import METRIC_NAMES, MetricsReport, QueryResult, query_metrics
from mitra.report import format_tables, render_figures, write_report_bundle


@pytest.fixture()
def small_report():
    rows = []
    for set_label, system, ranking, relevant in [
        ("set1", "dense", ("a", "b", "c"), {"a"}),
        ("set1", "bm25", ("b", "a", "c"), {"a"}),
        ("set2", "dense", ("a", "x", "y"), {"a"}),
        ("set2", "bm25", ("x", "y", "z"), {"a"}),
    ]:
        rows.append(
            QueryResult(
                query_id=f"q-{set_label}-{system}",
                set_label=set_label,
                system=system,
                ranking=ranking,
                metrics=query_metrics(ranking, relevant),
            )
        )
    return MetricsReport(rows)


def test_tables_layout(small_report):
    text = format_tables(small_report)
    assert "Retrieval completeness" in text
    assert "Ranking quality" in text
    for column in ("P@1", "R@1", "P@3", "R@3", "P@5", "R@5", "MRR", "NDCG@3", "NDCG@5"):
        assert column in text
    assert "Set 1" in text and "Set 2" in text
    assert "Keyword (BM25)" in text and "Dense + Rerank" in text


def test_bundle_contents(small_report, tmp_path):
    paths = write_report_bundle(small_report, tmp_path / "out")
    report = json.loads(paths["json"].read_text())
    assert set(report["aggregates"]) == {"bm25", "dense"}
    with paths["csv"].open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4  # 2 sets x 2 systems
    assert set(rows[0]) == {"query_set", "system", *METRIC_NAMES}
    with paths["per_query_csv"].open() as fh:
        per_query = list(csv.DictReader(fh))
    assert len(per_query) == 4
    assert paths["tables"].read_text().startswith("Retrieval completeness")


def test_figures_written(small_report, tmp_path):
    written = render_figures(small_report, tmp_path / "figs")
    names = sorted(p.name for p in written)
    assert names == ["precision_recall.png", "ranking_quality.png"]
    for path in written:
        assert path.stat().st_size > 1000  # a real PNG, not a stub
