"""Ingestion and serialization of reconstruction outputs."""

from .manifest import DatasetManifest, ManifestEntry, load_manifest, save_manifest
from .ply import read_ply, write_ply
from .sparse import (
    ModelBundle,
    SourceKind,
    parse_sparse_model,
    serialize_sparse_model,
)
from .dense import parse_generic_dense, save_generic_poses

__all__ = [
    "DatasetManifest",
    "ManifestEntry",
    "load_manifest",
    "save_manifest",
    "read_ply",
    "write_ply",
    "ModelBundle",
    "SourceKind",
    "parse_sparse_model",
    "serialize_sparse_model",
    "parse_generic_dense",
    "save_generic_poses",
]
