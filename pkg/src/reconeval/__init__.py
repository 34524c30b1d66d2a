"""Evaluation harness for 3D scene reconstructions of fly-over maritime video."""

__version__ = "0.1.0"

from .scene import (
    CameraIntrinsics,
    CameraModel,
    CameraPose,
    FrameRecord,
    Observation,
    ReconstructionScene,
    ScenePoint,
)
from .io import (
    DatasetManifest,
    ModelBundle,
    SourceKind,
    load_manifest,
    parse_generic_dense,
    parse_sparse_model,
    save_manifest,
    serialize_sparse_model,
)
from .reproject import frame_reprojection_error, reprojection_error
from .render import render_all, render_reprojection
from .metrics import difps, image_throughput, point_count_per_image
from .report import VideoMetrics, build_report
from .synth import SynthSpec, generate_scene, perturb_observations

__all__ = [
    "__version__",
    "CameraIntrinsics",
    "CameraModel",
    "CameraPose",
    "FrameRecord",
    "Observation",
    "ReconstructionScene",
    "ScenePoint",
    "DatasetManifest",
    "ModelBundle",
    "SourceKind",
    "load_manifest",
    "parse_generic_dense",
    "parse_sparse_model",
    "save_manifest",
    "serialize_sparse_model",
    "frame_reprojection_error",
    "reprojection_error",
    "render_all",
    "render_reprojection",
    "difps",
    "image_throughput",
    "point_count_per_image",
    "VideoMetrics",
    "build_report",
    "SynthSpec",
    "generate_scene",
    "perturb_observations",
]
