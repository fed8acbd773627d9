"""Exception hierarchy shared by all panomix modules."""


class PanomixError(Exception):
    """Base class for every error raised by this package."""


class InvalidCoordinateError(PanomixError):
    """Sampling was requested at a non-finite coordinate."""


class InvalidFactorError(PanomixError):
    """A stretch factor was zero, negative, or non-finite."""


class LayoutError(PanomixError):
    """Base for failures derived from a layout's geometry."""


class DegenerateLayoutError(LayoutError):
    """Layout cannot be lifted to a plan (e.g. floor corner at the horizon)."""


class InconsistentLayoutError(LayoutError):
    """Per-corner ceiling heights disagree beyond tolerance."""


class UnsupportedLayoutError(LayoutError):
    """Layout is not star-shaped around the camera."""


class DegeneratePointError(LayoutError):
    """A plan point coincides with the camera."""


class DegenerateWallError(LayoutError):
    """Two corners collapse onto the same integer column."""


class DegenerateBoundaryError(LayoutError):
    """Ceiling and floor boundaries coincide at some column."""


class GeometryError(PanomixError):
    """A ray/segment computation failed outside tolerance."""


class ConfigError(PanomixError):
    """Invalid configuration value or unknown class name."""


class IncompatibleSamplesError(PanomixError):
    """Samples cannot be fused (wall count or dimensions differ)."""


class EmptyStyleRegionError(PanomixError):
    """A style region has no background pixels to draw statistics from."""


class EmptyDatasetError(PanomixError):
    """Triple selection was asked to draw from an empty dataset."""


class ManifestError(PanomixError):
    """Manifest file is malformed or violates its invariants."""


class SampleLoadError(PanomixError):
    """Image/mask files do not match the manifest entry."""


class AdapterError(PanomixError):
    """External annotation file does not follow the expected format."""


class PipelineStageError(PanomixError):
    """Wraps an error from one stage of the augmentation pipeline."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


class BatchAbortError(PanomixError):
    """A sink write failed; carries the partially-built batch result."""

    def __init__(self, cause: Exception, partial):
        super().__init__(f"batch aborted: {cause}")
        self.cause = cause
        self.partial = partial
