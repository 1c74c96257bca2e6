"""Rendering of evaluation reports: aligned text tables, delimited output,
JSON, and bar-chart figures written next to them."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evalkit import METRIC_NAMES, MetricsReport

SYSTEM_LABELS = {"bm25": "Keyword (BM25)", "dense": "Dense + Rerank"}
SET_TITLES = {"set1": "Set 1", "set2": "Set 2"}

_COMPLETENESS_COLUMNS = ("P@1", "R@1", "P@3", "R@3", "P@5", "R@5")
_RANK_AWARE_COLUMNS = ("MRR", "NDCG@3", "NDCG@5")


def _system_label(system: str) -> str:
    return SYSTEM_LABELS.get(system, system)


def _set_title(set_label: str) -> str:
    return SET_TITLES.get(set_label, set_label)


def _render_table(report: MetricsReport, columns: tuple[str, ...], title: str) -> str:
    header = ["Query Set", "System", *columns]
    rows: list[list[str]] = []
    for set_label in report.set_labels:
        for system in report.systems:
            values = report.aggregate(system, set_label)
            rows.append(
                [_set_title(set_label), _system_label(system)]
                + [f"{values[c]:.2f}" for c in columns]
            )
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(len(header))]
    lines = [title]
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(header)))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
    return "\n".join(lines)


def format_tables(report: MetricsReport) -> str:
    """Two aligned tables: retrieval completeness and ranking quality."""
    completeness = _render_table(
        report, _COMPLETENESS_COLUMNS, "Retrieval completeness (Precision / Recall at k)"
    )
    rank_aware = _render_table(
        report, _RANK_AWARE_COLUMNS, "Ranking quality (rank-aware metrics)"
    )
    return f"{completeness}\n\n{rank_aware}\n"


def write_json(report: MetricsReport, path: Path) -> None:
    path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")


def write_csv(report: MetricsReport, path: Path) -> None:
    """Aggregate metrics in wide delimited form, one row per (set, system)."""
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_set", "system", *METRIC_NAMES])
        for set_label in report.set_labels:
            for system in report.systems:
                values = report.aggregate(system, set_label)
                writer.writerow(
                    [set_label, system, *(f"{values[name]:.6f}" for name in METRIC_NAMES)]
                )


def write_per_query_csv(report: MetricsReport, path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_id", "query_set", "system", *METRIC_NAMES, "ranking"])
        for row in report.rows:
            writer.writerow(
                [
                    row.query_id,
                    row.set_label,
                    row.system,
                    *(f"{row.metrics[name]:.6f}" for name in METRIC_NAMES),
                    " ".join(row.ranking),
                ]
            )


def _grouped_bars(ax, report: MetricsReport, set_label: str, columns: tuple[str, ...]) -> None:
    systems = report.systems
    n_groups = len(columns)
    width = 0.8 / max(len(systems), 1)
    for si, system in enumerate(systems):
        values = report.aggregate(system, set_label)
        positions = [g + si * width for g in range(n_groups)]
        ax.bar(positions, [values[c] for c in columns], width=width, label=_system_label(system))
    ax.set_xticks([g + width * (len(systems) - 1) / 2 for g in range(n_groups)])
    ax.set_xticklabels(columns)
    ax.set_ylim(0.0, 1.05)
    ax.set_title(_set_title(set_label))
    ax.grid(axis="y", alpha=0.3)


def render_figures(report: MetricsReport, out_dir: Path) -> list[Path]:
    """One figure per metric family, one panel per query set."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name, columns in (
        ("precision_recall", _COMPLETENESS_COLUMNS),
        ("ranking_quality", _RANK_AWARE_COLUMNS),
    ):
        set_labels = report.set_labels
        fig, axes = plt.subplots(1, len(set_labels), figsize=(5.5 * len(set_labels), 4.0), squeeze=False)
        for ax, set_label in zip(axes[0], set_labels):
            _grouped_bars(ax, report, set_label, columns)
        axes[0][0].set_ylabel("score")
        axes[0][-1].legend(loc="upper right", fontsize="small")
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def write_report_bundle(report: MetricsReport, out_dir: Path) -> dict[str, Path]:
    """Write every report artifact under one directory and return the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out_dir / "report.json",
        "csv": out_dir / "metrics.csv",
        "per_query_csv": out_dir / "per_query.csv",
        "tables": out_dir / "tables.txt",
    }
    write_json(report, paths["json"])
    write_csv(report, paths["csv"])
    write_per_query_csv(report, paths["per_query_csv"])
    paths["tables"].write_text(format_tables(report), encoding="utf-8")
    for figure_path in render_figures(report, out_dir / "figures"):
        paths[figure_path.stem] = figure_path
    return paths
