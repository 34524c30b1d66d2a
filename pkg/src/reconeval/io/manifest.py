"""Dataset manifests: which extracted frames exist and which are included.

A manifest records every frame saved from one source video (index = source
frame number), the sampling stride used to save them, and a per-frame included
flag. Frames excluded up front (title cards, transitions) or dropped by later
filtering keep their entries with ``included=false`` so decisions persist.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Tuple

from ..errors import ManifestError

__all__ = ["ManifestEntry", "DatasetManifest", "load_manifest", "save_manifest"]


@dataclass(frozen=True)
class ManifestEntry:
    index: int
    name: str
    included: bool = True


@dataclass(frozen=True)
class DatasetManifest:
    video_id: str
    sampling_stride: int
    frames: Tuple[ManifestEntry, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if self.sampling_stride < 1:
            raise ManifestError(f"sampling stride must be >= 1, got {self.sampling_stride}")
        seen = set()
        prev = None
        for entry in self.frames:
            if entry.index in seen:
                raise ManifestError(f"duplicate frame index {entry.index}")
            if prev is not None and entry.index < prev:
                raise ManifestError(
                    f"frame indices must be strictly increasing ({entry.index} after {prev})"
                )
            seen.add(entry.index)
            prev = entry.index

    @property
    def included_count(self) -> int:
        return sum(1 for e in self.frames if e.included)

    def included_names(self) -> Tuple[str, ...]:
        return tuple(e.name for e in self.frames if e.included)

    def with_included(self, names) -> "DatasetManifest":
        """Copy with included=true exactly for entries whose name is in ``names``."""
        names = set(names)
        frames = tuple(replace(e, included=e.name in names) for e in self.frames)
        return DatasetManifest(self.video_id, self.sampling_stride, frames)


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    try:
        frames = tuple(
            ManifestEntry(int(e["index"]), str(e["name"]), bool(e["included"]))
            for e in doc["frames"]
        )
        return DatasetManifest(str(doc["video_id"]), int(doc["sampling_stride"]), frames)
    except (KeyError, TypeError) as exc:
        raise ManifestError(f"{path}: malformed manifest ({exc})") from exc


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "video_id": manifest.video_id,
        "sampling_stride": manifest.sampling_stride,
        "frames": [
            {"index": e.index, "name": e.name, "included": e.included}
            for e in manifest.frames
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")
