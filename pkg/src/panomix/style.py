"""Style fusing: produce a foreground-free styled structure image with one
sample's layout and another sample's background appearance.

The neural generator the pipeline was designed around is replaced by two
deterministic strategies behind the same interface: ``warp_align``
(default) geometrically transfers the real background texture, while
``flat_stat`` fills each region from per-region color statistics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Layout, Panorama, Sample, bilinear_lookup
from .errors import ConfigError, EmptyStyleRegionError, IncompatibleSamplesError
from .furniture import (
    VerticalPolicy,
    alignment_coordinates,
    default_foreground_classes,
    resolve_class_ids,
)
from .geometry import layout_to_plan, plan_to_boundaries, wall_index_of_columns

CEILING_REGION = 0
FLOOR_REGION = 1

# Seed-stream tags so region fills and occlusion fills never collide.
_NOISE_STREAM_REGION = 0
_NOISE_STREAM_FILL = 1

# Orthonormal luma/chroma basis; inverse is the transpose.
_LUMA_CHROMA = np.array(
    [
        [1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)],
        [1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0), 0.0],
        [1.0 / np.sqrt(6.0), 1.0 / np.sqrt(6.0), -2.0 / np.sqrt(6.0)],
    ]
)

COLOR_SPACES = ("linear_rgb", "decorrelated_luma_chroma")


def _to_space(pixels: np.ndarray, space: str) -> np.ndarray:
    if space == "linear_rgb":
        return pixels
    return pixels @ _LUMA_CHROMA.T


def _from_space(values: np.ndarray, space: str) -> np.ndarray:
    if space == "linear_rgb":
        return values
    return values @ _LUMA_CHROMA


def wall_region(i: int) -> int:
    return 2 + i


@dataclass(frozen=True)
class RegionMask:
    """Per-pixel structure-region labels: ceiling, floor, wall_0..wall_{T-1},
    and (for reference masks) an `others` region covering foreground."""

    labels: np.ndarray
    wall_count: int

    def __post_init__(self):
        lab = np.array(self.labels, copy=True).astype(np.int32)
        lab.flags.writeable = False
        object.__setattr__(self, "labels", lab)

    @property
    def others_id(self) -> int:
        return 2 + self.wall_count

    @property
    def region_count(self) -> int:
        return 3 + self.wall_count

    @property
    def structure_ids(self) -> np.ndarray:
        return np.arange(2 + self.wall_count)

    def region_name(self, g: int) -> str:
        if g == CEILING_REGION:
            return "ceiling"
        if g == FLOOR_REGION:
            return "floor"
        if g == self.others_id:
            return "others"
        return f"wall_{g - 2}"


@dataclass(frozen=True)
class RegionStats:
    """Pixel count and per-channel mean/std for every region id."""

    counts: np.ndarray       # (R,)
    means: np.ndarray        # (R, 3) in color_space, NaN where empty
    stds: np.ndarray         # (R, 3)
    color_space: str

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0


@dataclass(frozen=True)
class StyleFuserConfig:
    strategy: str = "warp_align"
    color_space: str = "linear_rgb"
    noise_seed: int = 0
    fill_policy: str = "column_interpolate"
    wall_offset: int = 0  # style wall (i + offset) mod T serves structure wall i

    def __post_init__(self):
        if self.strategy not in ("warp_align", "flat_stat"):
            raise ConfigError(f"unknown style strategy {self.strategy!r}")
        if self.color_space not in COLOR_SPACES:
            raise ConfigError(f"unknown color space {self.color_space!r}")
        if self.fill_policy not in ("column_interpolate", "region_stat_fill"):
            raise ConfigError(f"unknown fill policy {self.fill_policy!r}")


def build_structure_mask(layout: Layout, height: int, width: int) -> RegionMask:
    """Region mask rendered from a layout alone: no `others` pixels."""
    plan = layout_to_plan(layout, height, width)
    bounds = plan_to_boundaries(plan, height, width, layout)
    wall = wall_index_of_columns(layout, np.arange(width, dtype=np.float64))
    rows = np.arange(height, dtype=np.float64)[:, None]
    labels = np.where(
        rows < bounds.ceil_rows,
        CEILING_REGION,
        np.where(rows > bounds.floor_rows, FLOOR_REGION, 2 + wall),
    )
    return RegionMask(labels, layout.wall_count)


def build_reference_mask(style: Sample, others_classes=None) -> RegionMask:
    """Structure mask of the style sample with foreground classes covered
    by the `others` region."""
    base = build_structure_mask(style.layout, style.height, style.width)
    wanted = others_classes if others_classes is not None else default_foreground_classes(
        style.mask.class_names
    )
    ids = resolve_class_ids(style.mask.class_names, wanted)
    labels = np.where(np.isin(style.mask.labels, ids), base.others_id, base.labels)
    return RegionMask(labels, base.wall_count)


def extract_region_stats(
    image: Panorama, regions: RegionMask, color_space: str = "linear_rgb"
) -> RegionStats:
    """Per-region pixel count and per-channel mean/std in the given space."""
    if (image.height, image.width) != regions.labels.shape:
        raise IncompatibleSamplesError("image and region mask dimensions differ")
    r_count = regions.region_count
    ids = regions.labels.reshape(-1)
    vals = _to_space(image.pixels.reshape(-1, 3), color_space)
    counts = np.bincount(ids, minlength=r_count)[:r_count].astype(np.int64)
    sums = np.empty((r_count, 3))
    sumsq = np.empty((r_count, 3))
    for ch in range(3):
        sums[:, ch] = np.bincount(ids, weights=vals[:, ch], minlength=r_count)[:r_count]
        sumsq[:, ch] = np.bincount(ids, weights=vals[:, ch] ** 2, minlength=r_count)[:r_count]
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts[:, None]
        variance = np.maximum(sumsq / counts[:, None] - means**2, 0.0)
    stds = np.sqrt(variance)
    return RegionStats(counts=counts, means=means, stds=stds, color_space=color_space)


def _region_mean_rgb(stats: RegionStats, g: int) -> np.ndarray:
    return _from_space(stats.means[g], stats.color_space)


def _fill_occluded(
    image: np.ndarray,
    occluded: np.ndarray,
    structure_labels: np.ndarray,
    stats: RegionStats,
    cfg: StyleFuserConfig,
) -> np.ndarray:
    """Replace occluded pixels using the configured fill policy."""
    out = np.array(image)
    height = image.shape[0]
    if cfg.fill_policy == "region_stat_fill":
        for g in np.unique(structure_labels[occluded]):
            sel = occluded & (structure_labels == g)
            n = int(np.count_nonzero(sel))
            rng = np.random.default_rng([cfg.noise_seed, _NOISE_STREAM_FILL, int(g)])
            vals = stats.means[g] + rng.standard_normal((n, 3)) * stats.stds[g]
            out[sel] = np.clip(_from_space(vals, cfg.color_space), 0.0, 1.0)
        return out

    # column_interpolate: blend along each column between the nearest
    # non-occluded pixels whose structure region matches.
    for c in np.nonzero(occluded.any(axis=0))[0]:
        col_occ = occluded[:, c]
        edges = np.flatnonzero(np.diff(col_occ.astype(np.int8)))
        starts = [int(e) + 1 for e in edges if not col_occ[e]]
        ends = [int(e) for e in edges if col_occ[e]]
        if col_occ[0]:
            starts.insert(0, 0)
        if col_occ[-1]:
            ends.append(height - 1)
        for r0, r1 in zip(starts, ends):
            above = r0 - 1
            below = r1 + 1
            run_regions = structure_labels[r0 : r1 + 1, c]
            for g in np.unique(run_regions):
                rows = r0 + np.flatnonzero(run_regions == g)
                top_ok = above >= 0 and structure_labels[above, c] == g
                bot_ok = below < height and structure_labels[below, c] == g
                if top_ok and bot_ok:
                    t = (rows - above) / (below - above)
                    out[rows, c] = (
                        image[above, c] * (1.0 - t[:, None]) + image[below, c] * t[:, None]
                    )
                elif top_ok:
                    out[rows, c] = image[above, c]
                elif bot_ok:
                    out[rows, c] = image[below, c]
                else:
                    out[rows, c] = np.clip(_region_mean_rgb(stats, int(g)), 0.0, 1.0)
    return out


def fuse_style(
    style: Sample,
    structure_layout: Layout,
    cfg: StyleFuserConfig | None = None,
    others_classes=None,
) -> Panorama:
    """Foreground-free panorama with the structure layout and the style
    sample's background appearance."""
    cfg = cfg if cfg is not None else StyleFuserConfig()
    if style.layout.wall_count != structure_layout.wall_count:
        raise IncompatibleSamplesError(
            f"wall counts differ: {style.layout.wall_count} vs {structure_layout.wall_count}"
        )
    h, w = style.height, style.width
    t = style.layout.wall_count
    base = build_structure_mask(style.layout, h, w)
    wanted = others_classes if others_classes is not None else default_foreground_classes(
        style.mask.class_names
    )
    ids = resolve_class_ids(style.mask.class_names, wanted)
    occluded = np.isin(style.mask.labels, ids)
    ref = RegionMask(np.where(occluded, base.others_id, base.labels), t)
    stats = extract_region_stats(style.image, ref, cfg.color_space)
    for g in range(2 + t):
        if stats.counts[g] == 0:
            raise EmptyStyleRegionError(
                f"style region {ref.region_name(g)!r} has no background pixels"
            )

    if cfg.strategy == "flat_stat":
        dst = build_structure_mask(structure_layout, h, w)
        out = np.empty((h, w, 3))
        for i in range(2 + t):
            g_src = i if i < 2 else 2 + (i - 2 + cfg.wall_offset) % t
            sel = dst.labels == i
            n = int(np.count_nonzero(sel))
            rng = np.random.default_rng([cfg.noise_seed, _NOISE_STREAM_REGION, i])
            vals = stats.means[g_src] + rng.standard_normal((n, 3)) * stats.stds[g_src]
            out[sel] = vals
        return Panorama(np.clip(_from_space(out, cfg.color_space), 0.0, 1.0))

    # warp_align: infill the style sample's foreground in source space,
    # then backward-warp the clean background onto the structure layout.
    background = _fill_occluded(style.image.pixels, occluded, base.labels, stats, cfg)
    x, y, _ = alignment_coordinates(
        style.layout,
        structure_layout,
        h,
        w,
        VerticalPolicy(),
        "plan_fraction",
        src_wall_offset=cfg.wall_offset,
    )
    return Panorama(bilinear_lookup(background, x, y))
