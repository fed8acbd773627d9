"""Geometry derived from a Layout: plan lifting, boundary curves, column
groups, and the pano-stretch warp.

The camera is normalized to height 1 above the floor, so the floor plane
is y = -1 and the ceiling plane is y = +h_c in camera coordinates. Plan
points live in the (x, z) plane with azimuth u = atan2(x, z).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .core import (
    Layout,
    Panorama,
    Sample,
    SemanticMask,
    bilinear_lookup,
    col_to_lon,
    lat_to_row,
    lon_to_col,
    nearest_lookup,
    roll_columns,
    row_to_lat,
)
from .errors import (
    DegenerateLayoutError,
    DegeneratePointError,
    DegenerateWallError,
    InconsistentLayoutError,
    InvalidFactorError,
    UnsupportedLayoutError,
)

# Relative disagreement between per-corner ceiling heights that layout
# lifting refuses to average over.
CEILING_LIFT_TOL = 0.05

_SEGMENT_HIT_TOL = 1e-6


@dataclass(frozen=True)
class PlanModel:
    """Top-down realization of a layout at camera height 1 above the floor.

    ``corners_xz[i]`` is the plan position of layout corner i; wall i runs
    from corner i to corner (i + 1) mod T.
    """

    corners_xz: np.ndarray  # (T, 2)
    ceiling_height: float   # above the camera

    def __post_init__(self):
        c = np.array(self.corners_xz, dtype=np.float64, copy=True)
        c.flags.writeable = False
        object.__setattr__(self, "corners_xz", c)

    @property
    def wall_count(self) -> int:
        return self.corners_xz.shape[0]

    def segment(self, i: int) -> np.ndarray:
        """Endpoints (2, 2) of wall i."""
        t = self.wall_count
        return np.stack([self.corners_xz[i % t], self.corners_xz[(i + 1) % t]])


@dataclass(frozen=True)
class BoundaryMap:
    """Per-column ceiling-wall and floor-wall intersection rows."""

    ceil_rows: np.ndarray   # (W,)
    floor_rows: np.ndarray  # (W,)

    def __post_init__(self):
        for name in ("ceil_rows", "floor_rows"):
            a = np.array(getattr(self, name), dtype=np.float64, copy=True)
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    @property
    def width(self) -> int:
        return self.ceil_rows.shape[0]

    def at(self, cols):
        """Linearly interpolated (ceil, floor) rows at real columns, wrapping."""
        cols = np.asarray(cols, dtype=np.float64)
        w = self.width
        c0 = np.floor(cols)
        f = cols - c0
        i0 = c0.astype(np.int64) % w
        i1 = (i0 + 1) % w
        ceil = self.ceil_rows[i0] * (1.0 - f) + self.ceil_rows[i1] * f
        floor = self.floor_rows[i0] * (1.0 - f) + self.floor_rows[i1] * f
        return ceil, floor


def layout_to_plan(layout: Layout, height: int, width: int) -> PlanModel:
    """Lift a layout to plan view with the camera 1 unit above the floor."""
    v_floor = row_to_lat(layout.floor_rows, height)
    if np.any(v_floor >= 0.0):
        raise DegenerateLayoutError("floor corner at or above the horizon")
    v_ceil = row_to_lat(layout.ceil_rows, height)
    if np.any(v_ceil <= 0.0):
        raise DegenerateLayoutError("ceiling corner at or below the horizon")
    u = col_to_lon(layout.columns, width)
    dist = 1.0 / np.tan(-v_floor)
    corners = np.stack([dist * np.sin(u), dist * np.cos(u)], axis=1)
    heights = dist * np.tan(v_ceil)
    h_c = float(np.median(heights))
    spread = float(np.max(np.abs(heights - h_c))) / h_c
    if spread > CEILING_LIFT_TOL:
        raise InconsistentLayoutError(
            f"per-corner ceiling heights disagree by {spread:.1%} (> {CEILING_LIFT_TOL:.0%})"
        )
    return PlanModel(corners, h_c)


def project_corner(point_xz, height: float, img_height: int, img_width: int):
    """Project a plan point at a given height to (col, row) image coordinates."""
    x, z = float(point_xz[0]), float(point_xz[1])
    dist = np.hypot(x, z)
    if dist < 1e-12:
        raise DegeneratePointError("plan point coincides with the camera")
    u = np.arctan2(x, z)
    v = np.arctan2(height, dist)
    return float(lon_to_col(u, img_width)), float(lat_to_row(v, img_height))


def wall_index_of_columns(layout: Layout, cols) -> np.ndarray:
    """Wall index owning each column: wall i spans [corner_i, corner_{i+1})."""
    idx = np.searchsorted(layout.columns, np.asarray(cols, dtype=np.float64), side="right") - 1
    return np.where(idx < 0, layout.wall_count - 1, idx).astype(np.int64)


def ray_segment_intersection(dir_x, dir_z, ax, az, ex, ez):
    """Solve t*(dir) = A + s*E for arrays; returns (t, s) with NaN where parallel."""
    det = ex * dir_z - ez * dir_x
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (ex * az - ez * ax) / det
        s = (dir_x * az - dir_z * ax) / det
    bad = np.abs(det) < 1e-15
    t = np.where(bad, np.nan, t)
    s = np.where(bad, np.nan, s)
    return t, s


def plan_to_boundaries(plan: PlanModel, height: int, width: int, layout: Layout | None = None) -> BoundaryMap:
    """Rasterize per-column ceiling/floor boundary rows by intersecting each
    column's azimuth ray with the wall segment owning that azimuth range.

    ``layout`` (when available) supplies the corner columns used to assign
    walls; otherwise they are recovered from the plan corners.
    """
    t_count = plan.wall_count
    cols = np.arange(width, dtype=np.float64)
    if layout is not None:
        wall = wall_index_of_columns(layout, cols)
    else:
        corner_cols = np.mod(lon_to_col(np.arctan2(plan.corners_xz[:, 0], plan.corners_xz[:, 1]), width), width)
        order = np.argsort(corner_cols)
        # plan corners are already azimuth-sorted; recover the same assignment
        idx = np.searchsorted(corner_cols[order], cols, side="right") - 1
        idx = np.where(idx < 0, t_count - 1, idx)
        wall = order[idx]
    u = col_to_lon(cols, width)
    a = plan.corners_xz[wall]
    b = plan.corners_xz[(wall + 1) % t_count]
    e = b - a
    t, s = ray_segment_intersection(np.sin(u), np.cos(u), a[:, 0], a[:, 1], e[:, 0], e[:, 1])
    ok = np.isfinite(t) & (t > 0.0) & (s >= -_SEGMENT_HIT_TOL) & (s <= 1.0 + _SEGMENT_HIT_TOL)
    if not np.all(ok):
        raise UnsupportedLayoutError(
            f"{int(np.count_nonzero(~ok))} columns miss their wall segment; layout is not star-shaped"
        )
    ceil = lat_to_row(np.arctan2(plan.ceiling_height, t), height)
    floor = lat_to_row(np.arctan2(-1.0, t), height)
    return BoundaryMap(ceil, floor)


@dataclass(frozen=True)
class ColumnGroup:
    """One wall's contiguous column range on the rolled sample."""

    wall_index: int
    col_start: int
    col_end: int  # exclusive
    image_slice: np.ndarray
    mask_slice: np.ndarray
    boundary_slice: np.ndarray  # (2, width): ceil rows then floor rows

    @property
    def width(self) -> int:
        return self.col_end - self.col_start


@dataclass(frozen=True)
class GroupSplit:
    """Result of splitting a sample into per-wall column groups."""

    sample: Sample  # rolled so corner 0's boundary sits at column 0
    roll: int       # amount passed to roll_columns (invert with -roll)
    boundaries: BoundaryMap
    groups: tuple


def split_column_groups(sample: Sample) -> GroupSplit:
    """Split a sample into the T contiguous column groups between corners.

    The sample is first rolled so corner 0 sits at column 0; group
    boundaries are corner columns rounded half-up, and the groups
    partition [0, W) exactly.
    """
    layout = sample.layout
    w = sample.width
    t = layout.wall_count
    rounded = np.floor(layout.columns + 0.5).astype(np.int64)
    k = -int(rounded[0])
    bounds = rounded + k  # non-negative, first is 0
    if np.any(np.diff(bounds) <= 0) or bounds[-1] >= w:
        raise DegenerateWallError("two corners round to the same column")
    rolled = roll_columns(sample, k)
    bmap = plan_to_boundaries(
        layout_to_plan(rolled.layout, sample.height, w), sample.height, w, rolled.layout
    )
    edges = list(bounds) + [w]
    groups = []
    for i in range(t):
        c0, c1 = int(edges[i]), int(edges[i + 1])
        groups.append(
            ColumnGroup(
                wall_index=i,
                col_start=c0,
                col_end=c1,
                image_slice=rolled.image.pixels[:, c0:c1],
                mask_slice=rolled.mask.labels[:, c0:c1],
                boundary_slice=np.stack([bmap.ceil_rows[c0:c1], bmap.floor_rows[c0:c1]]),
            )
        )
    return GroupSplit(sample=rolled, roll=k, boundaries=bmap, groups=tuple(groups))


def panostretch_dir(u, v, kx: float, kz: float):
    """Direction transform for scaling the world by (kx, 1, kz).

    Returns (u', v') with u' = atan2(kx sin u, kz cos u) and
    tan v' = tan v / sqrt(kx^2 sin^2 u + kz^2 cos^2 u). The inverse is the
    same transform with (1/kx, 1/kz).
    """
    if not (np.isfinite(kx) and np.isfinite(kz) and kx > 0.0 and kz > 0.0):
        raise InvalidFactorError(f"stretch factors must be positive, got ({kx}, {kz})")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    sx = kx * np.sin(u)
    cz = kz * np.cos(u)
    u2 = np.arctan2(sx, cz)
    v2 = np.arctan2(np.tan(v), np.hypot(sx, cz))
    return u2, v2


@functools.lru_cache(maxsize=8)
def _angle_grids(height: int, width: int):
    u = col_to_lon(np.arange(width, dtype=np.float64), width)
    v = row_to_lat(np.arange(height, dtype=np.float64), height)
    uu, vv = np.meshgrid(u, v)
    uu.flags.writeable = False
    vv.flags.writeable = False
    return uu, vv


def panostretch_image(sample: Sample, kx: float, kz: float) -> Sample:
    """Stretch a full sample by world factors (kx, kz).

    The image is backward-warped (bilinear), the mask with nearest
    lookup, and layout corners are forward-transformed and re-sorted.
    """
    h, w = sample.height, sample.width
    uu, vv = _angle_grids(h, w)
    su, sv = panostretch_dir(uu, vv, 1.0 / kx, 1.0 / kz)
    x = lon_to_col(su, w)
    y = lat_to_row(sv, h)
    img = bilinear_lookup(sample.image.pixels, x, y)
    lab = nearest_lookup(sample.mask.labels, x, y)

    layout = sample.layout
    u = col_to_lon(layout.columns, w)
    v_ceil = row_to_lat(layout.ceil_rows, h)
    v_floor = row_to_lat(layout.floor_rows, h)
    u2, v2c = panostretch_dir(u, v_ceil, kx, kz)
    _, v2f = panostretch_dir(u, v_floor, kx, kz)
    corners = np.stack(
        [np.mod(lon_to_col(u2, w), w), lat_to_row(v2c, h), lat_to_row(v2f, h)], axis=1
    )
    return Sample(
        Panorama(img),
        SemanticMask(lab, sample.mask.class_names),
        Layout(corners),
    )
