import csv
import json

import pytest

from reconeval.errors import MetricsError
from reconeval.report import (
    VideoMetrics,
    build_report,
    load_report_rows,
    write_report_bundle,
)


def row(video_id="v", **kwargs):
    defaults = dict(
        image_throughput_pct=100.0,
        reprojection_error_recomputed_px=0.9,
        point_count_per_image=300.0,
        lpips=0.4,
        difps=0.8,
        frame_count=10,
    )
    defaults.update(kwargs)
    return VideoMetrics(video_id=video_id, **defaults)


class TestBuildReport:
    def test_single_row_aggregate_equals_row(self):
        report = build_report([row()])
        assert report.aggregate["image_throughput_pct"] == 100.0
        assert report.aggregate["difps"] == 0.8
        assert report.aggregate["reprojection_error_px"] == 0.9

    def test_two_video_mean(self):
        report = build_report(
            [row("a", image_throughput_pct=50.0), row("b", image_throughput_pct=80.0)]
        )
        assert report.aggregate["image_throughput_pct"] == 65.0

    def test_absent_column_aggregated_over_present_and_flagged(self):
        report = build_report([row("a", lpips=None), row("b", lpips=0.3)])
        assert report.aggregate["lpips"] == 0.3
        assert report.present_counts["lpips"] == 1
        assert "lpips" in report.partial_columns()

    def test_identical_rows_return_that_row(self):
        rows = [row(f"v{i}") for i in range(3)]
        report = build_report(rows)
        for key, value in report.aggregate.items():
            assert value == pytest.approx(rows[0].column_value(key), abs=1e-12)

    def test_three_row_hand_mean_exact(self):
        a, b, c = 0.859, 0.914, 0.874
        report = build_report(
            [
                row("a", reprojection_error_recomputed_px=a),
                row("b", reprojection_error_recomputed_px=b),
                row("c", reprojection_error_recomputed_px=c),
            ]
        )
        assert report.aggregate["reprojection_error_px"] == (a + b + c) / 3

    def test_native_preferred_and_labeled(self):
        r = row("a", reprojection_error_recomputed_px=1.0, reprojection_error_native_px=0.5)
        assert r.reprojection_error() == (0.5, "native")
        report = build_report([r])
        assert report.aggregate["reprojection_error_px"] == 0.5
        assert report.reprojection_error_sources == ("native",)

    def test_missing_never_becomes_zero(self):
        report = build_report([row("a", lpips=None, difps=None)])
        assert report.aggregate["lpips"] is None
        assert report.aggregate["difps"] is None

    def test_empty_rejected(self):
        with pytest.raises(MetricsError):
            build_report([])

    def test_frame_weighted_mode(self):
        report = build_report(
            [
                row("a", difps=1.0, frame_count=1),
                row("b", difps=0.0, frame_count=3),
            ],
            weight_by_frames=True,
        )
        assert report.aggregate["difps"] == 0.25
        assert report.aggregation == "frame-weighted"

    def test_frame_weighted_requires_counts(self):
        with pytest.raises(MetricsError, match="frame_count"):
            build_report([row("a", frame_count=None)], weight_by_frames=True)

    def test_validation(self):
        with pytest.raises(MetricsError):
            VideoMetrics("v", image_throughput_pct=120.0)
        with pytest.raises(MetricsError):
            VideoMetrics("v", difps=1.5)
        with pytest.raises(MetricsError):
            VideoMetrics("v", lpips=-0.1)


class TestWriters:
    def test_bundle_outputs(self, tmp_path):
        report = build_report([row("video-a"), row("video-b", lpips=None)])
        paths = write_report_bundle(report, tmp_path)
        doc = json.loads(paths["json"].read_text())
        assert len(doc["rows"]) == 2
        assert doc["rows"][0]["video_id"] == "video-a"
        assert doc["partial_columns"] == ["lpips"]

        md = paths["markdown"].read_text()
        lines = md.splitlines()
        assert lines[0].startswith("| Video")
        for column in ("Image Throughput (%)", "Reprojection Error",
                       "Point Count per Image", "LPIPS", "DiFPS"):
            assert column in lines[0]
        assert "n/a" in md  # missing lpips cell
        # aligned columns: all table lines share one width
        table_lines = [ln for ln in lines if ln.startswith("|")]
        assert len({len(ln) for ln in table_lines}) == 1

        with open(paths["csv"]) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "video_id"
        assert len(rows) == 4  # header + 2 videos + mean

        names = {p.name for p in paths["figures"]}
        assert "difps.png" in names and "image_throughput_pct.png" in names
        for p in paths["figures"]:
            assert p.stat().st_size > 0

    def test_round_trip_rows(self, tmp_path):
        report = build_report([row("a"), row("b", difps=None)])
        paths = write_report_bundle(report, tmp_path)
        rows = load_report_rows(paths["json"])
        assert rows == list(report.rows)

    def test_figures_deterministic(self, tmp_path):
        report = build_report([row("a"), row("b")])
        p1 = write_report_bundle(report, tmp_path / "r1")
        p2 = write_report_bundle(report, tmp_path / "r2")
        for a, b in zip(p1["figures"], p2["figures"]):
            assert a.read_bytes() == b.read_bytes()
