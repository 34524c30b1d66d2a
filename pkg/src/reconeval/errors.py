"""Exception hierarchy shared across the harness."""


class ReconEvalError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ReconEvalError, ValueError):
    """An argument violates an operation's precondition (non-finite, out of range, ...)."""


class SceneIntegrityError(ReconEvalError):
    """A reconstruction violates referential integrity (dangling ids, duplicate tracks, ...)."""


class UnknownFrameError(ReconEvalError, KeyError):
    """A frame id is not registered in the scene."""


class UnsupportedCameraModelError(ReconEvalError):
    """A model file declares a camera model this harness does not support."""

    def __init__(self, model_id):
        super().__init__(f"unsupported camera model id {model_id!r}")
        self.model_id = model_id


class SparseModelError(ReconEvalError):
    """A sparse model file cannot be parsed (truncated, malformed, unwritable)."""


class PlyFormatError(ReconEvalError):
    """A PLY file cannot be parsed or lacks required vertex properties."""


class PosesFileError(ReconEvalError):
    """A generic poses JSON file is malformed or internally inconsistent."""


class ManifestError(ReconEvalError):
    """A dataset manifest is malformed (duplicate or unordered indices, bad stride)."""


class MaskError(ReconEvalError):
    """A region mask is empty, mis-sized, or not a strict 0/255 raster."""


class EmptyResultError(ReconEvalError):
    """An operation discarded every input frame and has nothing to return."""


class DegenerateFeatureError(ReconEvalError):
    """A feature vector has zero norm and cannot enter a cosine similarity."""


class MetricsError(ReconEvalError):
    """Metric inputs are malformed (dimension mismatch, out-of-range score, empty set)."""


class RenderError(ReconEvalError):
    """Rendering a frame failed; carries the offending frame id."""

    def __init__(self, frame_id, message):
        super().__init__(f"frame {frame_id}: {message}")
        self.frame_id = frame_id
