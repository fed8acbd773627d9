"""Equirectangular conventions, core sample types, and resampling primitives.

Conventions fixed here and relied on everywhere else:

* pixel centers sit at (col + 0.5, row + 0.5);
* longitude u(c) = 2*pi*(c + 0.5)/W - pi, so the image center faces +z;
* latitude v(r) = pi/2 - pi*(r + 0.5)/H, so row 0 is the zenith side and
  +y points up;
* a direction for (u, v) is (cos v * sin u, sin v, cos v * cos u);
* horizontal resampling wraps (the panorama is circular), vertical
  resampling clamps (the poles are boundaries).

Images are real-valued in [0, 1]; masks are class-index images. All types
are immutable after construction and all operations are pure functions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidCoordinateError


def col_to_lon(col, width):
    """Longitude in radians of a (possibly fractional) column index."""
    return (np.asarray(col, dtype=np.float64) + 0.5) * (2.0 * np.pi / width) - np.pi


def lon_to_col(lon, width):
    """Exact inverse of :func:`col_to_lon`."""
    return (np.asarray(lon, dtype=np.float64) + np.pi) * (width / (2.0 * np.pi)) - 0.5


def row_to_lat(row, height):
    """Latitude in radians of a (possibly fractional) row index."""
    return np.pi / 2.0 - (np.asarray(row, dtype=np.float64) + 0.5) * (np.pi / height)


def lat_to_row(lat, height):
    """Exact inverse of :func:`row_to_lat`."""
    return (np.pi / 2.0 - np.asarray(lat, dtype=np.float64)) * (height / np.pi) - 0.5


def direction(lon, lat):
    """Unit direction vector(s) for longitude/latitude, stacked on the last axis."""
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    cos_lat = np.cos(lat)
    return np.stack(
        [cos_lat * np.sin(lon), np.sin(lat), cos_lat * np.cos(lon)], axis=-1
    )


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Panorama:
    """Full-sphere equirectangular RGB image with channels in [0, 1]."""

    pixels: np.ndarray  # H x W x 3 float64

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError(f"panorama pixels must be HxWx3, got {px.shape}")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class SemanticMask:
    """Class-index image; index form structurally forbids mixed labels."""

    labels: np.ndarray  # H x W integer
    class_names: tuple

    def __post_init__(self):
        lab = np.array(self.labels, copy=True)
        if lab.ndim != 2:
            raise ValueError(f"mask labels must be HxW, got {lab.shape}")
        if not np.issubdtype(lab.dtype, np.integer):
            raise ValueError(f"mask labels must be integers, got {lab.dtype}")
        object.__setattr__(self, "labels", _freeze(lab.astype(np.int32)))
        object.__setattr__(self, "class_names", tuple(str(n) for n in self.class_names))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class Layout:
    """Ordered wall-corner columns with their ceiling and floor rows.

    ``corners`` is a (T, 3) array of [column, ceil_row, floor_row] rows,
    kept sorted by column ascending.
    """

    corners: np.ndarray

    def __post_init__(self):
        c = np.array(self.corners, dtype=np.float64, copy=True)
        if c.ndim != 2 or c.shape[1] != 3:
            raise ValueError(f"layout corners must be Tx3, got {c.shape}")
        c = c[np.argsort(c[:, 0], kind="stable")]
        object.__setattr__(self, "corners", _freeze(c))

    @property
    def wall_count(self) -> int:
        return self.corners.shape[0]

    @property
    def columns(self) -> np.ndarray:
        return self.corners[:, 0]

    @property
    def ceil_rows(self) -> np.ndarray:
        return self.corners[:, 1]

    @property
    def floor_rows(self) -> np.ndarray:
        return self.corners[:, 2]


@dataclass(frozen=True)
class Sample:
    """A training sample: image, semantic mask, and room layout."""

    image: Panorama
    mask: SemanticMask
    layout: Layout

    @property
    def height(self) -> int:
        return self.image.height

    @property
    def width(self) -> int:
        return self.image.width


def _check_finite(x, y):
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidCoordinateError("sampling coordinates must be finite")


def bilinear_lookup(array: np.ndarray, x, y) -> np.ndarray:
    """Bilinear lookup on a raw H x W[x C] array; x wraps, y clamps.

    Shared backend for :func:`sample_bilinear` and the warping modules.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_finite(x, y)
    h, w = array.shape[0], array.shape[1]
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    xi0 = x0.astype(np.int64) % w
    xi1 = (xi0 + 1) % w
    yi0 = np.clip(y0.astype(np.int64), 0, h - 1)
    yi1 = np.clip(yi0 + 1, 0, h - 1)
    if array.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = array[yi0, xi0] * (1.0 - fx) + array[yi0, xi1] * fx
    bot = array[yi1, xi0] * (1.0 - fx) + array[yi1, xi1] * fx
    return top * (1.0 - fy) + bot * fy


def nearest_lookup(array: np.ndarray, x, y) -> np.ndarray:
    """Nearest-neighbor lookup (round half up); x wraps, y clamps."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_finite(x, y)
    h, w = array.shape[0], array.shape[1]
    xi = np.floor(x + 0.5).astype(np.int64) % w
    yi = np.clip(np.floor(y + 0.5).astype(np.int64), 0, h - 1)
    return array[yi, xi]


def sample_bilinear(image: Panorama, x, y):
    """Bilinearly interpolated color at real coordinates (x, y)."""
    return bilinear_lookup(image.pixels, x, y)


def sample_nearest(mask: SemanticMask, x, y):
    """Class index at the nearest lattice point to (x, y)."""
    return nearest_lookup(mask.labels, x, y)


def roll_columns(sample: Sample, k: int) -> Sample:
    """Rotate a sample horizontally so output column c holds input column (c - k) mod W."""
    k = int(k) % sample.width
    if k == 0:
        return Sample(
            Panorama(sample.image.pixels),
            SemanticMask(sample.mask.labels, sample.mask.class_names),
            Layout(sample.layout.corners),
        )
    img = np.roll(sample.image.pixels, k, axis=1)
    lab = np.roll(sample.mask.labels, k, axis=1)
    corners = np.array(sample.layout.corners)
    corners[:, 0] = np.mod(corners[:, 0] + k, sample.width)
    return Sample(
        Panorama(img),
        SemanticMask(lab, sample.mask.class_names),
        Layout(corners),
    )


def flip_horizontal(sample: Sample) -> Sample:
    """Mirror a sample left/right; corner columns map to W - 1 - column."""
    w = sample.width
    img = sample.image.pixels[:, ::-1]
    lab = sample.mask.labels[:, ::-1]
    corners = np.array(sample.layout.corners)
    corners[:, 0] = (w - 1.0) - corners[:, 0]
    return Sample(
        Panorama(img),
        SemanticMask(lab, sample.mask.class_names),
        Layout(corners),
    )


# Relative tolerance for per-corner ceiling-height agreement in validation.
CEILING_AGREEMENT_TOL = 0.02


def validate_sample(sample: Sample) -> list:
    """Return a list of invariant violations (empty means the sample is valid)."""
    out = []
    img, mask, layout = sample.image, sample.mask, sample.layout
    h, w = img.height, img.width

    if h < 8:
        out.append(f"image height {h} below minimum 8")
    if w != 2 * h:
        out.append(f"image width {w} is not twice the height {h}")
    if not np.all(np.isfinite(img.pixels)):
        out.append("image contains non-finite values")
    elif img.pixels.size and (img.pixels.min() < 0.0 or img.pixels.max() > 1.0):
        out.append("image values outside [0, 1]")

    if (mask.height, mask.width) != (h, w):
        out.append(
            f"mask dimensions {mask.height}x{mask.width} do not match image {h}x{w}"
        )
    bad = int(np.count_nonzero((mask.labels < 0) | (mask.labels >= mask.class_count)))
    if bad:
        out.append(f"mask contains {bad} pixels with labels outside [0, {mask.class_count})")

    t = layout.wall_count
    if t < 3:
        out.append(f"layout has {t} corners, need at least 3")
    cols = layout.columns
    if cols.size and (cols.min() < 0.0 or cols.max() >= w):
        out.append("layout corner columns outside [0, W)")
    if np.any(np.diff(cols) <= 0):
        out.append("layout corner columns are not strictly increasing")
    for i in range(t):
        ceil_r, floor_r = layout.ceil_rows[i], layout.floor_rows[i]
        if not (0.0 <= ceil_r < floor_r < h):
            out.append(
                f"corner {i}: rows must satisfy 0 <= ceil ({ceil_r}) < floor ({floor_r}) < H"
            )

    if not out:
        # Cross-consistency: ceiling height lifted per corner must agree.
        v_floor = row_to_lat(layout.floor_rows, h)
        v_ceil = row_to_lat(layout.ceil_rows, h)
        if np.any(v_floor >= 0.0):
            out.append("floor corner at or above the horizon")
        elif np.any(v_ceil <= 0.0):
            out.append("ceiling corner at or below the horizon")
        else:
            dist = 1.0 / np.tan(-v_floor)
            heights = dist * np.tan(v_ceil)
            med = float(np.median(heights))
            spread = float(np.max(np.abs(heights - med))) / med
            if spread > CEILING_AGREEMENT_TOL:
                out.append(
                    f"per-corner ceiling heights disagree by {spread:.1%} (> {CEILING_AGREEMENT_TOL:.0%})"
                )
    return out
