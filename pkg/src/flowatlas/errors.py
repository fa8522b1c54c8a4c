"""Exception hierarchy shared across the package.

Every error carries a short machine-readable ``code`` so the HTTP layer can
map exceptions to structured error bodies without string matching.
"""


class FlowAtlasError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


# -- dataset / manifest ------------------------------------------------------

class MissingFile(FlowAtlasError):
    code = "missing_file"


class MalformedManifest(FlowAtlasError):
    code = "malformed_manifest"


class ShapeMismatch(FlowAtlasError):
    code = "shape_mismatch"


class NonFiniteEmbedding(FlowAtlasError):
    code = "non_finite_embedding"


class InvalidRange(FlowAtlasError):
    code = "invalid_range"


# -- embedding file format ---------------------------------------------------

class BadMagic(FlowAtlasError):
    code = "bad_magic"


class UnsupportedVersion(FlowAtlasError):
    code = "unsupported_version"


class TruncatedPayload(FlowAtlasError):
    """Payload length does not match the declared matrix shape."""

    code = "truncated_payload"


# -- projection --------------------------------------------------------------

class TooFewFrames(FlowAtlasError):
    code = "too_few_frames"


class MissingFrameCoordinate(FlowAtlasError):
    code = "missing_frame_coordinate"


class DuplicateRow(FlowAtlasError):
    code = "duplicate_row"


class UnknownCase(FlowAtlasError):
    code = "unknown_case"


# -- trajectory analytics ----------------------------------------------------

class TrajectoryTooShort(FlowAtlasError):
    code = "trajectory_too_short"


class EmptySet(FlowAtlasError):
    code = "empty_set"


class CaseSetMismatch(FlowAtlasError):
    code = "case_set_mismatch"


# -- annotations / reports ---------------------------------------------------

class UnknownCluster(FlowAtlasError):
    code = "unknown_cluster"

    def __init__(self, message: str, is_noise: bool = False):
        super().__init__(message)
        self.is_noise = is_noise


class EmptyText(FlowAtlasError):
    code = "empty_text"


class NoAnnotatedCentroids(FlowAtlasError):
    code = "no_annotated_centroids"


class VlmUnavailable(FlowAtlasError):
    code = "vlm_unavailable"


class VlmMalformedResponse(FlowAtlasError):
    code = "vlm_malformed_response"
