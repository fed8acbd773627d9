"""Procedural cuboid-room renderer used as the independent geometric oracle.

Scenes are flat-colored (no shading) by default so that, after any warp,
pixel provenance can be tested by exact color lookup. The camera sits at
height 1 above the floor; all scene lengths are in room units.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Layout, Panorama, Sample, SemanticMask
from .errors import ConfigError
from .geometry import _angle_grids, project_corner

# Structure face ids used while ray casting.
_FACE_CEILING = 0
_FACE_FLOOR = 1
_FACE_WALL_PX = 2
_FACE_WALL_NX = 3
_FACE_WALL_PZ = 4
_FACE_WALL_NZ = 5

SURFACE_NAMES = ("ceiling", "floor", "wall_px", "wall_nx", "wall_pz", "wall_nz")


@dataclass(frozen=True)
class Texture:
    """Surface texture: flat color, axis-aligned checker, or gradient."""

    kind: str = "flat"
    color: tuple = (0.5, 0.5, 0.5)
    color2: tuple = (0.0, 0.0, 0.0)
    period: float = 0.5

    def __post_init__(self):
        if self.kind not in ("flat", "checker", "gradient"):
            raise ConfigError(f"unknown texture kind {self.kind!r}")
        if self.kind == "checker" and not self.period > 0.0:
            raise ConfigError("checker period must be positive")
        object.__setattr__(self, "color", tuple(float(c) for c in self.color))
        object.__setattr__(self, "color2", tuple(float(c) for c in self.color2))

    def eval(self, coord_a, coord_b, frac):
        """Color at surface coordinates; ``frac`` is the gradient position."""
        c0 = np.asarray(self.color)
        if self.kind == "flat":
            return np.broadcast_to(c0, coord_a.shape + (3,)).copy()
        c1 = np.asarray(self.color2)
        if self.kind == "checker":
            parity = (
                np.floor(coord_a / self.period) + np.floor(coord_b / self.period)
            ).astype(np.int64) % 2
            return np.where(parity[..., None] == 0, c0, c1)
        return c0 * (1.0 - frac[..., None]) + c1 * frac[..., None]


@dataclass(frozen=True)
class BoxSpec:
    """Axis-aligned furniture box; plan rect in room-centered coordinates,
    heights measured above the floor."""

    x0: float
    x1: float
    z0: float
    z1: float
    base: float
    top: float
    color: tuple
    class_name: str

    def __post_init__(self):
        object.__setattr__(self, "color", tuple(float(c) for c in self.color))
        if not (self.x0 < self.x1 and self.z0 < self.z1 and self.base < self.top):
            raise ConfigError("box extents must be positive")


@dataclass(frozen=True)
class SceneSpec:
    """Cuboid room with camera offset, per-surface textures, and boxes."""

    half_x: float
    half_z: float
    camera_x: float = 0.0
    camera_z: float = 0.0
    ceiling: float = 1.5  # above the camera
    textures: dict = field(default_factory=dict)
    boxes: tuple = ()
    class_names: tuple = ("ceiling", "floor", "wall")

    def __post_init__(self):
        object.__setattr__(self, "boxes", tuple(self.boxes))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        tex = {name: Texture(color=(0.5, 0.5, 0.5)) for name in SURFACE_NAMES}
        tex.update(self.textures)
        unknown = set(tex) - set(SURFACE_NAMES)
        if unknown:
            raise ConfigError(f"unknown surface names {sorted(unknown)}")
        object.__setattr__(self, "textures", tex)
        if not (self.half_x > 0.0 and self.half_z > 0.0 and self.ceiling > 0.0):
            raise ConfigError("room extents and ceiling height must be positive")
        if not (abs(self.camera_x) < self.half_x and abs(self.camera_z) < self.half_z):
            raise ConfigError("camera must be strictly inside the room")
        for b in self.boxes:
            if b.class_name not in self.class_names:
                raise ConfigError(f"box class {b.class_name!r} not in vocabulary")
            if not (
                -self.half_x < b.x0
                and b.x1 < self.half_x
                and -self.half_z < b.z0
                and b.z1 < self.half_z
                and b.top <= 1.0 + self.ceiling
            ):
                raise ConfigError("box must fit strictly inside the room")
            if b.x0 <= self.camera_x <= b.x1 and b.z0 <= self.camera_z <= b.z1:
                raise ConfigError("camera must not intersect a box")
        for i, a in enumerate(self.boxes):
            for b in self.boxes[i + 1 :]:
                if a.x0 < b.x1 and b.x0 < a.x1 and a.z0 < b.z1 and b.z0 < a.z1:
                    raise ConfigError("boxes must not overlap in plan")

    def plan_corners_camera(self) -> np.ndarray:
        """Room corners in camera-centered plan coordinates, one per wall."""
        room = np.array(
            [
                [-self.half_x, -self.half_z],
                [-self.half_x, self.half_z],
                [self.half_x, self.half_z],
                [self.half_x, -self.half_z],
            ]
        )
        return room - np.array([self.camera_x, self.camera_z])


def _slab_interval(origin, direction, lo, hi):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - origin) / direction
        t2 = (hi - origin) / direction
    tmin = np.minimum(t1, t2)
    tmax = np.maximum(t1, t2)
    parallel = direction == 0.0
    inside = (origin >= lo) & (origin <= hi)
    tmin = np.where(parallel, np.where(inside, -np.inf, np.inf), tmin)
    tmax = np.where(parallel, np.where(inside, np.inf, -np.inf), tmax)
    return tmin, tmax


def raycast(spec: SceneSpec, lon, lat):
    """Cast rays at longitudes/latitudes; returns (class indices, colors).

    This is the analytic path used both by :func:`render_scene` and by
    tests probing arbitrary directions.
    """
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    dx = np.cos(lat) * np.sin(lon)
    dy = np.sin(lat)
    dz = np.cos(lat) * np.cos(lon)
    ox, oz = spec.camera_x, spec.camera_z
    sx, sz, hc = spec.half_x, spec.half_z, spec.ceiling

    with np.errstate(divide="ignore", invalid="ignore"):
        tx = np.where(dx > 0.0, (sx - ox) / dx, (-sx - ox) / dx)
        tz = np.where(dz > 0.0, (sz - oz) / dz, (-sz - oz) / dz)
        ty = np.where(dy > 0.0, hc / dy, -1.0 / dy)
    tx = np.where(dx == 0.0, np.inf, tx)
    tz = np.where(dz == 0.0, np.inf, tz)
    ty = np.where(dy == 0.0, np.inf, ty)

    t_room = np.minimum(np.minimum(tx, ty), tz)
    face = np.where(
        t_room == ty,
        np.where(dy > 0.0, _FACE_CEILING, _FACE_FLOOR),
        np.where(
            t_room == tx,
            np.where(dx > 0.0, _FACE_WALL_PX, _FACE_WALL_NX),
            np.where(dz > 0.0, _FACE_WALL_PZ, _FACE_WALL_NZ),
        ),
    )

    # Hit points in room-centered coordinates.
    hx = ox + t_room * dx
    hy = t_room * dy
    hz = oz + t_room * dz

    colors = np.zeros(lon.shape + (3,))
    wall_frac = np.clip((hy + 1.0) / (hc + 1.0), 0.0, 1.0)
    plane_frac = np.clip((hz + sz) / (2.0 * sz), 0.0, 1.0)
    face_coords = {
        _FACE_CEILING: (hx, hz, plane_frac),
        _FACE_FLOOR: (hx, hz, plane_frac),
        _FACE_WALL_PX: (hz, hy, wall_frac),
        _FACE_WALL_NX: (hz, hy, wall_frac),
        _FACE_WALL_PZ: (hx, hy, wall_frac),
        _FACE_WALL_NZ: (hx, hy, wall_frac),
    }
    for fid, name in enumerate(SURFACE_NAMES):
        sel = face == fid
        if not np.any(sel):
            continue
        a, b, frac = face_coords[fid]
        colors[sel] = spec.textures[name].eval(a[sel], b[sel], frac[sel])

    names = list(spec.class_names)
    wall_id = names.index("wall")
    classes = np.where(
        face == _FACE_CEILING,
        names.index("ceiling"),
        np.where(face == _FACE_FLOOR, names.index("floor"), wall_id),
    ).astype(np.int32)

    t_best = t_room
    for box in spec.boxes:
        t1x, t2x = _slab_interval(ox, dx, box.x0, box.x1)
        t1y, t2y = _slab_interval(0.0, dy, box.base - 1.0, box.top - 1.0)
        t1z, t2z = _slab_interval(oz, dz, box.z0, box.z1)
        enter = np.maximum(np.maximum(t1x, t1y), t1z)
        exit_ = np.minimum(np.minimum(t2x, t2y), t2z)
        hit = (enter <= exit_) & (enter > 1e-9) & (enter < t_best)
        if np.any(hit):
            classes = np.where(hit, names.index(box.class_name), classes)
            colors[hit] = np.asarray(box.color)
            t_best = np.where(hit, enter, t_best)
    return classes, colors


def render_scene(spec: SceneSpec, height: int, width: int) -> Sample:
    """Render a full sample by casting one ray per pixel center; the layout
    is computed analytically from the room's plan corners."""
    uu, vv = _angle_grids(height, width)
    classes, colors = raycast(spec, uu, vv)

    corners = []
    for point in spec.plan_corners_camera():
        col, ceil_row = project_corner(point, spec.ceiling, height, width)
        _, floor_row = project_corner(point, -1.0, height, width)
        corners.append([col, ceil_row, floor_row])
    return Sample(
        Panorama(np.clip(colors, 0.0, 1.0)),
        SemanticMask(classes, spec.class_names),
        Layout(np.asarray(corners)),
    )


@dataclass(frozen=True)
class SceneParams:
    """Sampling ranges for :func:`random_scene`. Defaults keep strip-height
    and wall-width ratios moderate across scene pairs so warped boundaries
    stay within rasterization tolerance."""

    half_extent: tuple = (1.7, 2.5)
    ceiling: tuple = (1.3, 1.7)
    camera_offset: float = 0.15
    box_count: tuple = (0, 4)
    box_size: tuple = (0.35, 0.85)
    box_top: tuple = (0.35, 0.55)  # fraction of floor-to-ceiling height
    box_base: tuple = (0.0, 0.15)
    wall_margin: float = 0.3
    camera_clearance: float = 0.6
    textured: bool = False  # checker/gradient instead of flat surfaces

    def __post_init__(self):
        for name in ("half_extent", "ceiling", "box_count", "box_size", "box_top", "box_base"):
            lo, hi = getattr(self, name)
            if not (lo <= hi):
                raise ConfigError(f"invalid range for {name}: ({lo}, {hi})")
        if self.half_extent[0] <= self.camera_offset:
            raise ConfigError("camera offset must be below the smallest half extent")
        if self.box_count[0] < 0:
            raise ConfigError("box count cannot be negative")


# 6^3 well-separated palette levels, exactly representable after 8-bit I/O.
_PALETTE_LEVELS = np.array([26, 64, 102, 140, 179, 217]) / 255.0


def _palette(rng: np.random.Generator, count: int) -> list:
    idx = rng.permutation(len(_PALETTE_LEVELS) ** 3)[:count]
    out = []
    for i in idx:
        r, rem = divmod(int(i), len(_PALETTE_LEVELS) ** 2)
        g, b = divmod(rem, len(_PALETTE_LEVELS))
        out.append((_PALETTE_LEVELS[r], _PALETTE_LEVELS[g], _PALETTE_LEVELS[b]))
    return out


def _azimuth_arc(x0, x1, z0, z1, cam_x, cam_z):
    """Minimal circular arc (start, extent) covering a plan rectangle."""
    angles = np.arctan2(
        np.array([x0, x0, x1, x1]) - cam_x, np.array([z0, z1, z0, z1]) - cam_z
    )
    angles = np.sort(angles)
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * np.pi]]))
    widest = int(np.argmax(gaps))
    start = angles[(widest + 1) % 4] if widest < 3 else angles[0]
    extent = 2.0 * np.pi - gaps[widest]
    return float(start), float(extent)


def _arcs_overlap(a, b, margin):
    s1, e1 = a
    s2, e2 = b
    gap = np.mod(s2 - s1, 2.0 * np.pi)
    if gap < e1 + margin:
        return True
    return np.mod(s1 - s2, 2.0 * np.pi) < e2 + margin


def random_scene(seed: int, params: SceneParams | None = None) -> SceneSpec:
    """Seeded-deterministic scene with distinct flat colors per surface and
    box, so pixel provenance is color-decodable after warping."""
    params = params if params is not None else SceneParams()
    rng = np.random.default_rng(seed)
    sx = float(rng.uniform(*params.half_extent))
    sz = float(rng.uniform(*params.half_extent))
    hc = float(rng.uniform(*params.ceiling))
    cam_x = float(rng.uniform(-params.camera_offset, params.camera_offset))
    cam_z = float(rng.uniform(-params.camera_offset, params.camera_offset))

    n_boxes = int(rng.integers(params.box_count[0], params.box_count[1] + 1))
    max_boxes = params.box_count[1]
    colors = _palette(rng, 6 + max_boxes)

    textures = {}
    for i, name in enumerate(SURFACE_NAMES):
        if params.textured and name not in ("ceiling", "floor") and i % 2 == 0:
            textures[name] = Texture(
                kind="checker", color=colors[i], color2=colors[(i + 3) % 6], period=0.5
            )
        else:
            textures[name] = Texture(color=colors[i])

    class_names = ("ceiling", "floor", "wall") + tuple(f"box_{i}" for i in range(max_boxes))
    boxes = []
    arcs = []
    placed = 0
    attempts = 0
    while placed < n_boxes and attempts < 200:
        attempts += 1
        w = float(rng.uniform(*params.box_size))
        d = float(rng.uniform(*params.box_size))
        cx = float(rng.uniform(-sx + params.wall_margin + w / 2, sx - params.wall_margin - w / 2))
        cz = float(rng.uniform(-sz + params.wall_margin + d / 2, sz - params.wall_margin - d / 2))
        x0, x1 = cx - w / 2, cx + w / 2
        z0, z1 = cz - d / 2, cz + d / 2
        near_x = np.clip(cam_x, x0, x1)
        near_z = np.clip(cam_z, z0, z1)
        if np.hypot(near_x - cam_x, near_z - cam_z) < params.camera_clearance:
            continue
        arc = _azimuth_arc(x0, x1, z0, z1, cam_x, cam_z)
        if any(_arcs_overlap(arc, other, 0.05) for other in arcs):
            continue
        base = float(rng.uniform(*params.box_base))
        top = base + float(rng.uniform(*params.box_top)) * (1.0 + hc)
        boxes.append(
            BoxSpec(
                x0=x0,
                x1=x1,
                z0=z0,
                z1=z1,
                base=base,
                top=min(top, 1.0 + hc - 0.05),
                color=colors[6 + placed],
                class_name=f"box_{placed}",
            )
        )
        arcs.append(arc)
        placed += 1

    return SceneSpec(
        half_x=sx,
        half_z=sz,
        camera_x=cam_x,
        camera_z=cam_z,
        ceiling=hc,
        textures=textures,
        boxes=tuple(boxes),
        class_names=class_names,
    )
