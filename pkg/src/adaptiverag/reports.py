"""Report rendering: per-query delimited rows, structured aggregate
tables, and plot-data series mirroring the benchmark's tables and
figures.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .benchmark import REPORT_SCHEMA_VERSION, BenchmarkReport

FORMATS = ("structured-table", "delimited-rows", "plot-data")

_ROW_COLUMNS = [
    "schema_version", "method", "query_id", "domain", "tier", "question_type",
    "strategy", "classifier_source", "accuracy", "completeness", "relevance",
    "quality", "precision", "recall", "f1", "latency_seconds",
    "retrieved_sections", "error",
]

TABLE_COLUMNS = ("Quality", "Recall", "Precision", "F1", "Latency")


def _overall_table(report: BenchmarkReport) -> dict:
    table = {}
    for method, agg in report.aggregates["overall"].items():
        table[method] = {
            "Quality": agg["quality"],
            "Recall": agg["recall"],
            "Precision": agg["precision"],
            "F1": agg["f1"],
            "Latency": agg["latency_seconds"],
        }
    return table


def emit_report(report: BenchmarkReport, out_dir: str | Path,
                formats: set[str] | None = None) -> list[Path]:
    """Write the selected report surfaces; returns the created paths."""
    formats = set(formats or FORMATS)
    unknown = formats - set(FORMATS)
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    if "delimited-rows" in formats:
        path = out_dir / "per_query.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=_ROW_COLUMNS)
            writer.writeheader()
            for row in report.rows:
                record = {
                    "schema_version": REPORT_SCHEMA_VERSION,
                    "retrieved_sections": ";".join(row.retrieved_sections),
                }
                for column in _ROW_COLUMNS:
                    if column in record:
                        continue
                    record[column] = getattr(row, column)
                writer.writerow(record)
        written.append(path)

    if "structured-table" in formats:
        path = out_dir / "tables.json"
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "overall": _overall_table(report),
            "by_domain": report.aggregates["by_domain"],
            "by_question_type": report.aggregates["by_question_type"],
            "metadata": report.metadata,
        }
        path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
        written.append(path)

    if "plot-data" in formats:
        path = out_dir / "plots.json"
        tier_series: dict[str, dict[str, dict[str, float]]] = {}
        for key, agg in report.aggregates["by_tier"].items():
            method, tier = key.split("|")
            tier_series.setdefault(method, {})[tier] = {
                "quality": agg["quality"],
                "recall": agg["recall"],
            }
        matrix: dict[str, dict[str, float]] = {}
        for key, agg in report.aggregates["by_domain_tier"].items():
            method, domain, tier = key.split("|")
            matrix.setdefault(method, {})[f"{domain}|{tier}"] = agg["quality"]
        scatter = [
            {
                "method": row.method,
                "query_id": row.query_id,
                "latency_seconds": row.latency_seconds,
                "quality": row.quality,
            }
            for row in report.rows
        ]
        payload = {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tier_series": tier_series,
            "latency_quality_scatter": scatter,
            "domain_tier_matrix": matrix,
        }
        path.write_text(json.dumps(payload, indent=1), encoding="utf-8")
        written.append(path)

    return written


def format_summary(report: BenchmarkReport) -> str:
    """Human-readable overall table, three decimals per the usual rendering."""
    table = _overall_table(report)
    header = f"{'Method':<10}" + "".join(f"{c:>11}" for c in TABLE_COLUMNS)
    lines = [header, "-" * len(header)]
    for method in sorted(table):
        cells = table[method]
        lines.append(
            f"{method:<10}"
            + "".join(f"{cells[c]:>11.3f}" for c in TABLE_COLUMNS)
        )
    return "\n".join(lines)
