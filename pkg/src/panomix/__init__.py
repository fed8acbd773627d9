"""panomix: mix-and-swap augmentation for indoor equirectangular panoramas.

An augmented sample combines the room layout of one sample, the
background style of a second, and the foreground furniture of a third.
"""

__version__ = "0.1.0"

from .core import (
    Layout,
    Panorama,
    Sample,
    SemanticMask,
    col_to_lon,
    lat_to_row,
    lon_to_col,
    roll_columns,
    row_to_lat,
    sample_bilinear,
    sample_nearest,
    validate_sample,
)
from .furniture import (
    VerticalPolicy,
    align_sample,
    composite,
    horizontal_map,
    vertical_source_row,
)
from .geometry import (
    BoundaryMap,
    PlanModel,
    layout_to_plan,
    panostretch_dir,
    panostretch_image,
    plan_to_boundaries,
    project_corner,
    split_column_groups,
)
from .pipeline import (
    AugmentConfig,
    TripleSpec,
    batch_augment,
    panomixswap,
    select_triples,
)
from .style import (
    RegionMask,
    StyleFuserConfig,
    build_reference_mask,
    build_structure_mask,
    extract_region_stats,
    fuse_style,
)
from .synth import SceneParams, SceneSpec, random_scene, render_scene

__all__ = [
    "AugmentConfig",
    "BoundaryMap",
    "Layout",
    "Panorama",
    "PlanModel",
    "RegionMask",
    "Sample",
    "SceneParams",
    "SceneSpec",
    "SemanticMask",
    "StyleFuserConfig",
    "TripleSpec",
    "VerticalPolicy",
    "align_sample",
    "batch_augment",
    "build_reference_mask",
    "build_structure_mask",
    "col_to_lon",
    "composite",
    "extract_region_stats",
    "fuse_style",
    "horizontal_map",
    "lat_to_row",
    "layout_to_plan",
    "lon_to_col",
    "panomixswap",
    "panostretch_dir",
    "panostretch_image",
    "plan_to_boundaries",
    "project_corner",
    "random_scene",
    "render_scene",
    "roll_columns",
    "row_to_lat",
    "sample_bilinear",
    "sample_nearest",
    "select_triples",
    "split_column_groups",
    "validate_sample",
    "vertical_source_row",
]
