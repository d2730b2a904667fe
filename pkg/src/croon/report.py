"""Report rendering: canonical JSON, delimited rows, an aligned text
table, and matplotlib figures written next to the data files."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluate import EvalReport

TABLE_COLUMNS = ("id", "per", "jump_ratio", "asr_lat", "llm_lat", "svs_lat", "quality", "error")


def _fmt(value, nd=4) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{nd}f}"
    return str(value)


def render_table(report: EvalReport) -> str:
    """Aligned plain-text table, one row per item plus an aggregate row."""
    rows = []
    for r in report.rows:
        rows.append(
            (
                r.id,
                _fmt(r.per),
                _fmt(r.jump_ratio),
                _fmt(r.latencies.get("asr")),
                _fmt(r.latencies.get("llm")),
                _fmt(r.latencies.get("svs")),
                _fmt(r.quality),
                r.error or "-",
            )
        )
    agg = report.aggregates
    rows.append(
        (
            "MEAN",
            _fmt(agg.get("per")),
            _fmt(agg.get("jump_ratio")),
            _fmt(agg.get("latency_asr")),
            _fmt(agg.get("latency_llm")),
            _fmt(agg.get("latency_svs")),
            _fmt(agg.get("quality")),
            f"failures={report.failures}",
        )
    )
    widths = [
        max(len(TABLE_COLUMNS[i]), max(len(row[i]) for row in rows))
        for i in range(len(TABLE_COLUMNS))
    ]
    lines = [
        "  ".join(name.ljust(w) for name, w in zip(TABLE_COLUMNS, widths)),
        "  ".join("-" * w for w in widths),
    ]
    lines.extend("  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows)
    return "\n".join(lines) + "\n"


def write_csv(report: EvalReport, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(TABLE_COLUMNS)
        for r in report.rows:
            writer.writerow(
                [
                    r.id,
                    "" if r.per is None else r.per,
                    "" if r.jump_ratio is None else r.jump_ratio,
                    r.latencies.get("asr", ""),
                    r.latencies.get("llm", ""),
                    r.latencies.get("svs", ""),
                    "" if r.quality is None else r.quality,
                    r.error or "",
                ]
            )


def write_figures(report: EvalReport, out_dir: Path) -> list[Path]:
    """Per-item metric bars and mean stage latencies as PNG files."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    ok = [r for r in report.rows if r.error is None]

    stages = sorted({s for r in ok for s in r.latencies})
    if stages:
        means = [
            sum(r.latencies[s] for r in ok if s in r.latencies)
            / max(1, sum(1 for r in ok if s in r.latencies))
            for s in stages
        ]
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.bar(stages, means, color="#4878a8")
        ax.set_ylabel("mean latency (s)")
        ax.set_title("Per-stage latency")
        fig.tight_layout()
        path = out_dir / "latency.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    for metric, label in (("per", "phoneme error rate"), ("jump_ratio", "large jump ratio")):
        pairs = [(r.id, getattr(r, metric)) for r in ok if getattr(r, metric) is not None]
        if not pairs:
            continue
        fig, ax = plt.subplots(figsize=(max(4, 0.6 * len(pairs) + 2), 3.5))
        ax.bar([p[0] for p in pairs], [p[1] for p in pairs], color="#76a84e")
        ax.set_ylabel(label)
        ax.set_title(label)
        ax.tick_params(axis="x", rotation=45)
        fig.tight_layout()
        path = out_dir / f"{metric}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def write_report(report: EvalReport, out_dir: str | Path, figures: bool = True) -> dict[str, Path]:
    """Write report.json, report.csv, report.txt, and figures/*.png."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out_dir / "report.json",
        "csv": out_dir / "report.csv",
        "txt": out_dir / "report.txt",
    }
    paths["json"].write_text(report.to_json(), encoding="utf-8")
    write_csv(report, paths["csv"])
    paths["txt"].write_text(render_table(report), encoding="utf-8")
    if figures:
        for i, fig_path in enumerate(write_figures(report, out_dir / "figures")):
            paths[f"figure_{i}"] = fig_path
    return paths
