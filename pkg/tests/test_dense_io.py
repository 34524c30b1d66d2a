import json

import numpy as np
import pytest

from reconeval.errors import PlyFormatError, PosesFileError
from reconeval.io.dense import parse_generic_dense, save_generic_poses
from reconeval.io.ply import write_ply
from reconeval.io.sparse import SourceKind
from reconeval.reproject import frame_reprojection_error
from reconeval.synth import SynthSpec, generate_scene


def poses_doc(frames=1, total=None, native=None):
    doc = {
        "input_frame_total": total if total is not None else frames,
        "cameras": [
            {
                "camera_id": 1,
                "model": "PINHOLE",
                "width": 640,
                "height": 480,
                "params": [500.0, 500.0, 320.0, 240.0],
            }
        ],
        "frames": [],
    }
    for k in range(frames):
        entry = {
            "frame_id": k + 1,
            "name": f"img_{k:03d}.png",
            "camera_id": 1,
            "qvec": [1.0, 0.0, 0.0, 0.0],
            "tvec": [0.0, 0.0, float(k)],
        }
        if native is not None:
            entry["native_reprojection_error"] = native
        doc["frames"].append(entry)
    return doc


class TestParseGenericDense:
    def test_empty_cloud_one_pose(self, tmp_path):
        write_ply(tmp_path / "p.ply", np.zeros((0, 3)))
        (tmp_path / "poses.json").write_text(json.dumps(poses_doc(frames=1)))
        bundle = parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")
        assert bundle.source_kind is SourceKind.GENERIC_DENSE
        assert len(bundle.scene.frames) == 1
        assert len(bundle.scene.points) == 0

    def test_colors_carried(self, tmp_path):
        (tmp_path / "p.ply").write_bytes(
            b"ply\nformat ascii 1.0\nelement vertex 3\n"
            b"property float x\nproperty float y\nproperty float z\n"
            b"property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n"
            b"0 0 1 255 0 0\n1 0 1 0 255 0\n0 1 1 0 0 255\n"
        )
        (tmp_path / "poses.json").write_text(json.dumps(poses_doc()))
        bundle = parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")
        colors = [bundle.scene.points[i].color for i in range(3)]
        assert colors == [(255, 0, 0), (0, 255, 0), (0, 0, 255)]
        # dense outputs carry no tracks
        assert all(not p.track for p in bundle.scene.points.values())
        assert frame_reprojection_error(bundle.scene, 1) is None

    def test_binary_and_ascii_agree(self, tmp_path):
        rng = np.random.default_rng(9)
        positions = rng.normal(size=(10, 3))
        colors = rng.integers(0, 256, size=(10, 3)).astype(np.uint8)
        write_ply(tmp_path / "a.ply", positions, colors, binary=False)
        write_ply(tmp_path / "b.ply", positions, colors, binary=True)
        (tmp_path / "poses.json").write_text(json.dumps(poses_doc()))
        sa = parse_generic_dense(tmp_path / "a.ply", tmp_path / "poses.json").scene
        sb = parse_generic_dense(tmp_path / "b.ply", tmp_path / "poses.json").scene
        assert sa == sb

    def test_missing_xyz_is_format_error(self, tmp_path):
        (tmp_path / "p.ply").write_bytes(
            b"ply\nformat ascii 1.0\nelement vertex 1\n"
            b"property float x\nproperty float y\nend_header\n1 2\n"
        )
        (tmp_path / "poses.json").write_text(json.dumps(poses_doc()))
        with pytest.raises(PlyFormatError):
            parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")

    def test_unknown_camera_is_integrity_error(self, tmp_path):
        write_ply(tmp_path / "p.ply", np.zeros((0, 3)))
        doc = poses_doc()
        doc["frames"][0]["camera_id"] = 42
        (tmp_path / "poses.json").write_text(json.dumps(doc))
        with pytest.raises(PosesFileError, match="unknown camera 42"):
            parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")

    def test_input_frame_total_required(self, tmp_path):
        write_ply(tmp_path / "p.ply", np.zeros((0, 3)))
        doc = poses_doc()
        del doc["input_frame_total"]
        (tmp_path / "poses.json").write_text(json.dumps(doc))
        with pytest.raises(PosesFileError, match="input_frame_total"):
            parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")

    def test_native_errors_ingested(self, tmp_path):
        write_ply(tmp_path / "p.ply", np.zeros((0, 3)))
        (tmp_path / "poses.json").write_text(json.dumps(poses_doc(frames=2, native=0.5)))
        bundle = parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")
        assert bundle.native_reprojection_errors == {1: 0.5, 2: 0.5}

    def test_throughput_total_preserved(self, tmp_path):
        write_ply(tmp_path / "p.ply", np.zeros((0, 3)))
        (tmp_path / "poses.json").write_text(json.dumps(poses_doc(frames=2, total=10)))
        bundle = parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")
        assert bundle.scene.input_frame_total == 10

    def test_default_color_without_rgb(self, tmp_path):
        write_ply(tmp_path / "p.ply", np.array([[0.0, 0.0, 2.0]]))
        (tmp_path / "poses.json").write_text(json.dumps(poses_doc()))
        bundle = parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")
        assert bundle.scene.points[0].color == (128, 128, 128)


class TestSaveGenericPoses:
    def test_round_trip_through_writer(self, tmp_path):
        scene = generate_scene(SynthSpec(num_points=0, num_cameras=3, seed=2))
        save_generic_poses(scene, tmp_path / "poses.json", native_errors={1: 0.25})
        write_ply(tmp_path / "p.ply", np.zeros((0, 3)))
        bundle = parse_generic_dense(tmp_path / "p.ply", tmp_path / "poses.json")
        assert bundle.scene.cameras == scene.cameras
        assert bundle.scene.frames == scene.frames
        assert bundle.native_reprojection_errors == {1: 0.25}
