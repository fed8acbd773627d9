"""Furniture fusing: align a furniture sample to a structure layout
(horizontal wall-fraction mapping, then per-column vertical backward
warping), and composite the warped foreground over a styled background.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Layout,
    Panorama,
    Sample,
    SemanticMask,
    bilinear_lookup,
    col_to_lon,
    lon_to_col,
    nearest_lookup,
)
from .errors import (
    ConfigError,
    DegenerateBoundaryError,
    GeometryError,
    IncompatibleSamplesError,
)
from .geometry import (
    PlanModel,
    layout_to_plan,
    plan_to_boundaries,
    ray_segment_intersection,
    wall_index_of_columns,
)

# Semantic class names treated as room structure rather than foreground.
STRUCTURE_CLASS_NAMES = ("ceiling", "floor", "wall")

_SEGMENT_HIT_TOL = 1e-6


def default_foreground_classes(class_names) -> tuple:
    """Every class that is not ceiling/floor/wall."""
    return tuple(n for n in class_names if n not in STRUCTURE_CLASS_NAMES)


def resolve_class_ids(class_names, wanted) -> np.ndarray:
    """Map class names to indices, rejecting unknown names."""
    names = list(class_names)
    ids = []
    for n in wanted:
        if n not in names:
            raise ConfigError(f"unknown class name {n!r}; vocabulary is {names}")
        ids.append(names.index(n))
    return np.asarray(sorted(set(ids)), dtype=np.int64)


@dataclass(frozen=True)
class VerticalPolicy:
    """How destination rows map to source rows outside/inside the wall band.

    ``bijective`` mode derives alpha/beta so that [0, H-1] maps onto
    [0, H-1] with the image edges fixed; ``fixed`` mode uses the given
    alpha/beta and clamps out-of-range source rows.
    """

    mode: str = "bijective"
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.mode not in ("bijective", "fixed"):
            raise ConfigError(f"unknown vertical mode {self.mode!r}")
        if self.mode == "fixed" and not (self.alpha > 0.0 and self.beta > 0.0):
            raise ConfigError("fixed-mode alpha and beta must be positive")


def vertical_source_row(r, a_src, b_src, a_dst, b_dst, policy: VerticalPolicy, height: int):
    """Source row for destination row(s) r given ceiling/floor boundary rows.

    Three branches: above the ceiling boundary, below the floor boundary,
    and the linear wall band in between; source rows are clamped to
    [0, H-1]. All arguments broadcast.
    """
    r = np.asarray(r, dtype=np.float64)
    a_src = np.asarray(a_src, dtype=np.float64)
    b_src = np.asarray(b_src, dtype=np.float64)
    a_dst = np.asarray(a_dst, dtype=np.float64)
    b_dst = np.asarray(b_dst, dtype=np.float64)
    if np.any(a_dst >= b_dst):
        raise DegenerateBoundaryError("destination ceiling boundary not above floor boundary")
    if policy.mode == "bijective":
        alpha = np.where(a_dst > 0.0, a_src / np.where(a_dst > 0.0, a_dst, 1.0), 1.0)
        edge = height - 1.0
        beta = np.where(b_dst < edge, (edge - b_src) / np.where(b_dst < edge, edge - b_dst, 1.0), 1.0)
    else:
        alpha = np.float64(policy.alpha)
        beta = np.float64(policy.beta)
    ceil_branch = a_src - alpha * (a_dst - r)
    floor_branch = b_src + beta * (r - b_dst)
    wall_branch = a_src + (b_src - a_src) * (r - a_dst) / (b_dst - a_dst)
    src = np.where(r < a_dst, ceil_branch, np.where(r > b_dst, floor_branch, wall_branch))
    return np.clip(src, 0.0, height - 1.0)


@dataclass(frozen=True)
class WallPair:
    """Corresponding wall segments of the source and destination plans.

    ``dst_col_range`` is (start, end) with end exclusive; end may exceed
    the image width for the wall that wraps across the seam.
    """

    src_segment: np.ndarray  # (2, 2) plan endpoints
    dst_segment: np.ndarray
    dst_col_range: tuple
    width: int

    def __post_init__(self):
        for name in ("src_segment", "dst_segment"):
            seg = np.array(getattr(self, name), dtype=np.float64, copy=True)
            if seg.shape != (2, 2):
                raise ValueError(f"{name} must be 2x2, got {seg.shape}")
            if np.hypot(*(seg[1] - seg[0])) <= 1e-9:
                raise ValueError(f"{name} is degenerate")
            seg.flags.writeable = False
            object.__setattr__(self, name, seg)


def wall_pairs(src_plan: PlanModel, dst_plan: PlanModel, dst_layout: Layout, width: int) -> list:
    """Build the per-wall segment pairs used by the horizontal map."""
    if src_plan.wall_count != dst_plan.wall_count:
        raise IncompatibleSamplesError(
            f"wall counts differ: {src_plan.wall_count} vs {dst_plan.wall_count}"
        )
    t = dst_plan.wall_count
    bounds = np.floor(dst_layout.columns + 0.5).astype(np.int64)
    pairs = []
    for i in range(t):
        end = int(bounds[(i + 1) % t]) if i + 1 < t else int(bounds[0]) + width
        pairs.append(
            WallPair(
                src_segment=src_plan.segment(i),
                dst_segment=dst_plan.segment(i),
                dst_col_range=(int(bounds[i]), end),
                width=width,
            )
        )
    return pairs


def horizontal_map(dst_col: float, pair: WallPair) -> float:
    """Map a destination column to the source column at the same wall fraction.

    The destination azimuth ray is intersected with the destination
    segment; the source point at the same segment fraction gives the
    source azimuth.
    """
    u = float(col_to_lon(dst_col, pair.width))
    a = pair.dst_segment[0]
    e = pair.dst_segment[1] - pair.dst_segment[0]
    t, s = ray_segment_intersection(np.sin(u), np.cos(u), a[0], a[1], e[0], e[1])
    if not (np.isfinite(t) and t > 0.0 and -_SEGMENT_HIT_TOL <= s <= 1.0 + _SEGMENT_HIT_TOL):
        raise GeometryError(
            f"column {dst_col} ray misses its wall segment (t={t}, s={s})"
        )
    s = float(np.clip(s, 0.0, 1.0))
    p = pair.src_segment[0] + s * (pair.src_segment[1] - pair.src_segment[0])
    return float(lon_to_col(np.arctan2(p[0], p[1]), pair.width))


def _plan_fraction_src_cols(cols, wall, dst_plan: PlanModel, src_plan: PlanModel, width: int, offset: int = 0):
    t_count = dst_plan.wall_count
    u = col_to_lon(cols, width)
    a = dst_plan.corners_xz[wall]
    e = dst_plan.corners_xz[(wall + 1) % t_count] - a
    t, s = ray_segment_intersection(np.sin(u), np.cos(u), a[:, 0], a[:, 1], e[:, 0], e[:, 1])
    ok = np.isfinite(t) & (t > 0.0) & (s >= -_SEGMENT_HIT_TOL) & (s <= 1.0 + _SEGMENT_HIT_TOL)
    if not np.all(ok):
        raise GeometryError(
            f"{int(np.count_nonzero(~ok))} destination columns miss their wall segment"
        )
    s = np.clip(s, 0.0, 1.0)
    src_wall = (wall + offset) % t_count
    sa = src_plan.corners_xz[src_wall]
    p = sa + s[:, None] * (src_plan.corners_xz[(src_wall + 1) % t_count] - sa)
    return lon_to_col(np.arctan2(p[:, 0], p[:, 1]), width)


def _linear_src_cols(cols, wall, dst_layout: Layout, src_layout: Layout, width: int, offset: int = 0):
    t_count = dst_layout.wall_count
    d0 = dst_layout.columns[wall]
    d_span = np.mod(dst_layout.columns[(wall + 1) % t_count] - d0, width)
    src_wall = (wall + offset) % t_count
    s0 = src_layout.columns[src_wall]
    s_span = np.mod(src_layout.columns[(src_wall + 1) % t_count] - s0, width)
    frac = np.mod(cols - d0, width) / d_span
    return np.mod(s0 + frac * s_span, width)


def alignment_coordinates(
    src_layout: Layout,
    dst_layout: Layout,
    height: int,
    width: int,
    vertical: VerticalPolicy,
    horizontal: str = "plan_fraction",
    src_wall_offset: int = 0,
):
    """Per-pixel (src_col, src_row) arrays mapping dst geometry to src geometry.

    ``src_wall_offset`` rotates the wall correspondence: source wall
    (i + offset) mod T serves destination wall i.
    """
    if src_layout.wall_count != dst_layout.wall_count:
        raise IncompatibleSamplesError(
            f"wall counts differ: {src_layout.wall_count} vs {dst_layout.wall_count}"
        )
    if horizontal not in ("plan_fraction", "linear"):
        raise ConfigError(f"unknown horizontal mode {horizontal!r}")
    src_plan = layout_to_plan(src_layout, height, width)
    dst_plan = layout_to_plan(dst_layout, height, width)
    src_bounds = plan_to_boundaries(src_plan, height, width, src_layout)
    dst_bounds = plan_to_boundaries(dst_plan, height, width, dst_layout)

    cols = np.arange(width, dtype=np.float64)
    wall = wall_index_of_columns(dst_layout, cols)
    if horizontal == "plan_fraction":
        src_cols = _plan_fraction_src_cols(cols, wall, dst_plan, src_plan, width, src_wall_offset)
    else:
        src_cols = _linear_src_cols(cols, wall, dst_layout, src_layout, width, src_wall_offset)

    a_src, b_src = src_bounds.at(src_cols)
    rows = np.arange(height, dtype=np.float64)[:, None]
    src_rows = vertical_source_row(
        rows, a_src, b_src, dst_bounds.ceil_rows, dst_bounds.floor_rows, vertical, height
    )
    return np.broadcast_to(src_cols, (height, width)), src_rows, dst_bounds


def align_sample(
    furniture: Sample,
    structure_layout: Layout,
    vertical: VerticalPolicy | None = None,
    horizontal: str = "plan_fraction",
    relabel_background: bool = False,
):
    """Backward-warp a furniture sample onto a structure layout.

    Returns the warped image (bilinear) and mask (nearest). With
    ``relabel_background`` the warped structure labels are replaced by
    labels re-rendered from the structure layout; foreground labels are
    kept either way.
    """
    vertical = vertical if vertical is not None else VerticalPolicy()
    h, w = furniture.height, furniture.width
    x, y, dst_bounds = alignment_coordinates(
        furniture.layout, structure_layout, h, w, vertical, horizontal
    )
    img = bilinear_lookup(furniture.image.pixels, x, y)
    lab = nearest_lookup(furniture.mask.labels, x, y)
    if relabel_background:
        names = furniture.mask.class_names
        ids = resolve_class_ids(names, STRUCTURE_CLASS_NAMES)
        ceiling_id, floor_id, wall_id = (
            names.index("ceiling"),
            names.index("floor"),
            names.index("wall"),
        )
        rows = np.arange(h, dtype=np.float64)[:, None]
        structural = np.where(
            rows < dst_bounds.ceil_rows,
            ceiling_id,
            np.where(rows > dst_bounds.floor_rows, floor_id, wall_id),
        )
        background = np.isin(lab, ids)
        lab = np.where(background, structural, lab)
    return Panorama(img), SemanticMask(lab, furniture.mask.class_names)


def composite(
    warped_image: Panorama,
    warped_mask: SemanticMask,
    styled_image: Panorama,
    structure_layout: Layout,
    foreground_classes=None,
) -> Sample:
    """Select warped-furniture pixels where the mask is foreground, styled
    background elsewhere; the mask and layout pass through unchanged."""
    if (warped_image.height, warped_image.width) != (styled_image.height, styled_image.width):
        raise IncompatibleSamplesError("image dimensions differ")
    names = warped_mask.class_names
    wanted = foreground_classes if foreground_classes is not None else default_foreground_classes(names)
    ids = resolve_class_ids(names, wanted)
    fg = np.isin(warped_mask.labels, ids)
    img = np.where(fg[..., None], warped_image.pixels, styled_image.pixels)
    return Sample(
        Panorama(img),
        SemanticMask(warped_mask.labels, names),
        Layout(structure_layout.corners),
    )
