"""Per-video metric rows, dataset aggregation, and report writers.

A report is emitted in four forms: machine JSON, an aligned-column markdown
table, CSV, and one bar-chart PNG per metric column. The table carries exactly
the five benchmark columns (image throughput, reprojection error, point count
per image, LPIPS, DiFPS); missing optional values stay absent and never turn
into zeros.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import MetricsError

__all__ = ["VideoMetrics", "MetricsReport", "build_report", "write_report_bundle"]

# displayed column key -> (header, format)
_COLUMNS = {
    "image_throughput_pct": ("Image Throughput (%)", "{:.1f}"),
    "reprojection_error_px": ("Reprojection Error", "{:.3f}"),
    "point_count_per_image": ("Point Count per Image", "{:.1f}"),
    "lpips": ("LPIPS", "{:.3f}"),
    "difps": ("DiFPS", "{:.3f}"),
}

_MISSING = "n/a"


@dataclass(frozen=True)
class VideoMetrics:
    """One evaluated video. Optional metrics stay None when unavailable."""

    video_id: str
    image_throughput_pct: Optional[float] = None
    reprojection_error_recomputed_px: Optional[float] = None
    reprojection_error_native_px: Optional[float] = None
    point_count_per_image: Optional[float] = None
    lpips: Optional[float] = None
    difps: Optional[float] = None
    frame_count: Optional[int] = None

    def __post_init__(self):
        if self.image_throughput_pct is not None and not (
            0.0 <= self.image_throughput_pct <= 100.0
        ):
            raise MetricsError(f"throughput {self.image_throughput_pct} outside [0, 100]")
        if self.difps is not None and not (-1.0 - 1e-9 <= self.difps <= 1.0 + 1e-9):
            raise MetricsError(f"DiFPS {self.difps} outside [-1, 1]")
        if self.lpips is not None and not (0.0 <= self.lpips <= 1.0):
            raise MetricsError(f"LPIPS {self.lpips} outside [0, 1]")
        if self.point_count_per_image is not None and self.point_count_per_image < 0:
            raise MetricsError("point count per image must be >= 0")

    def reprojection_error(self) -> Tuple[Optional[float], Optional[str]]:
        """Value for the report column: producer-native when present, else recomputed."""
        if self.reprojection_error_native_px is not None:
            return self.reprojection_error_native_px, "native"
        if self.reprojection_error_recomputed_px is not None:
            return self.reprojection_error_recomputed_px, "recomputed"
        return None, None

    def column_value(self, key: str) -> Optional[float]:
        if key == "reprojection_error_px":
            return self.reprojection_error()[0]
        return getattr(self, key)


@dataclass(frozen=True)
class MetricsReport:
    rows: Tuple[VideoMetrics, ...]
    aggregate: Dict[str, Optional[float]]
    present_counts: Dict[str, int]
    aggregation: str  # "video-mean" or "frame-weighted"
    reprojection_error_sources: Tuple[str, ...]

    def partial_columns(self) -> Tuple[str, ...]:
        """Columns that are absent in at least one row (flagged in outputs)."""
        return tuple(
            key for key, count in self.present_counts.items() if 0 < count < len(self.rows)
        )


def build_report(rows: Sequence[VideoMetrics], weight_by_frames: bool = False) -> MetricsReport:
    """Aggregate per-video rows into a dataset report.

    The default aggregate is the unweighted mean of per-video values per
    column; ``weight_by_frames`` switches to frame-count weighting (rows
    lacking a frame count are rejected in that mode).
    """
    rows = tuple(rows)
    if not rows:
        raise MetricsError("report needs at least one per-video row")
    if weight_by_frames and any(r.frame_count is None for r in rows):
        raise MetricsError("frame-weighted aggregation requires frame_count on every row")

    aggregate: Dict[str, Optional[float]] = {}
    counts: Dict[str, int] = {}
    for key in _COLUMNS:
        present = [(r.column_value(key), r.frame_count) for r in rows if r.column_value(key) is not None]
        counts[key] = len(present)
        if not present:
            aggregate[key] = None
        elif weight_by_frames:
            total = sum(n for _, n in present)
            aggregate[key] = sum(v * n for v, n in present) / total if total else None
        else:
            aggregate[key] = sum(v for v, _ in present) / len(present)

    sources = tuple(
        src for src in (r.reprojection_error()[1] for r in rows) if src is not None
    )
    return MetricsReport(
        rows,
        aggregate,
        counts,
        "frame-weighted" if weight_by_frames else "video-mean",
        sources,
    )


def _row_dict(row: VideoMetrics) -> dict:
    value, source = row.reprojection_error()
    return {
        "video_id": row.video_id,
        "image_throughput_pct": row.image_throughput_pct,
        "reprojection_error_px": value,
        "reprojection_error_source": source,
        "reprojection_error_recomputed_px": row.reprojection_error_recomputed_px,
        "reprojection_error_native_px": row.reprojection_error_native_px,
        "point_count_per_image": row.point_count_per_image,
        "lpips": row.lpips,
        "difps": row.difps,
        "frame_count": row.frame_count,
    }


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "rows": [_row_dict(r) for r in report.rows],
        "aggregate": dict(report.aggregate),
        "present_counts": dict(report.present_counts),
        "partial_columns": list(report.partial_columns()),
        "aggregation": report.aggregation,
        "reprojection_error_sources": sorted(set(report.reprojection_error_sources)),
    }


def write_report_json(report: MetricsReport, path) -> None:
    Path(path).write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n")


def load_report_rows(path) -> List[VideoMetrics]:
    """Re-load the per-video rows of a previously written report JSON."""
    try:
        doc = json.loads(Path(path).read_text())
        rows = []
        for r in doc["rows"]:
            rows.append(
                VideoMetrics(
                    video_id=r["video_id"],
                    image_throughput_pct=r.get("image_throughput_pct"),
                    reprojection_error_recomputed_px=r.get("reprojection_error_recomputed_px"),
                    reprojection_error_native_px=r.get("reprojection_error_native_px"),
                    point_count_per_image=r.get("point_count_per_image"),
                    lpips=r.get("lpips"),
                    difps=r.get("difps"),
                    frame_count=r.get("frame_count"),
                )
            )
        return rows
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MetricsError(f"{path}: not a readable report ({exc})") from exc


def _format_cell(key: str, value: Optional[float]) -> str:
    if value is None:
        return _MISSING
    return _COLUMNS[key][1].format(value)


def write_report_markdown(report: MetricsReport, path) -> None:
    """Aligned-column markdown table: one row per video plus the dataset mean."""
    headers = ["Video"] + [header for header, _ in _COLUMNS.values()]
    body: List[List[str]] = []
    for row in report.rows:
        body.append([row.video_id] + [_format_cell(k, row.column_value(k)) for k in _COLUMNS])
    body.append(
        [f"dataset mean ({report.aggregation})"]
        + [_format_cell(k, report.aggregate[k]) for k in _COLUMNS]
    )

    widths = [max(len(headers[i]), *(len(r[i]) for r in body)) for i in range(len(headers))]
    def fmt_line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"

    lines = [fmt_line(headers), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    lines += [fmt_line(r) for r in body]
    partial = report.partial_columns()
    if partial:
        names = ", ".join(_COLUMNS[k][0] for k in partial)
        lines.append("")
        lines.append(f"Columns aggregated over present rows only: {names}.")
    Path(path).write_text("\n".join(lines) + "\n")


def write_report_csv(report: MetricsReport, path) -> None:
    fields = [
        "video_id",
        "image_throughput_pct",
        "reprojection_error_px",
        "reprojection_error_source",
        "point_count_per_image",
        "lpips",
        "difps",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in report.rows:
            value, source = row.reprojection_error()
            writer.writerow(
                [
                    row.video_id,
                    row.image_throughput_pct,
                    value,
                    source or "",
                    row.point_count_per_image,
                    row.lpips,
                    row.difps,
                ]
            )
        writer.writerow(
            [
                f"dataset mean ({report.aggregation})",
                report.aggregate["image_throughput_pct"],
                report.aggregate["reprojection_error_px"],
                "",
                report.aggregate["point_count_per_image"],
                report.aggregate["lpips"],
                report.aggregate["difps"],
            ]
        )


def write_report_figures(report: MetricsReport, out_dir) -> List[Path]:
    """Render one bar chart per metric column; columns with no data are skipped."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for key, (header, _) in _COLUMNS.items():
        labeled = [
            (row.video_id, row.column_value(key))
            for row in report.rows
            if row.column_value(key) is not None
        ]
        if not labeled:
            continue
        labels = [name for name, _ in labeled] + ["mean"]
        values = [value for _, value in labeled] + [report.aggregate[key]]
        colors = ["#4878a8"] * len(labeled) + ["#b85c3c"]

        fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * len(labels)), 3.2))
        ax.bar(range(len(values)), values, color=colors)
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel(header)
        ax.set_title(header)
        fig.tight_layout()
        path = out_dir / f"{key}.png"
        fig.savefig(path, dpi=100, metadata={"Software": "reconeval"})
        plt.close(fig)
        written.append(path)
    return written


def write_report_bundle(report: MetricsReport, out_dir, stem: str = "report") -> dict:
    """Write JSON + markdown + CSV + figures under ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{stem}.json"
    md_path = out_dir / f"{stem}.md"
    csv_path = out_dir / f"{stem}.csv"
    write_report_json(report, json_path)
    write_report_markdown(report, md_path)
    write_report_csv(report, csv_path)
    figures = write_report_figures(report, out_dir / "figures")
    return {"json": json_path, "markdown": md_path, "csv": csv_path, "figures": figures}
