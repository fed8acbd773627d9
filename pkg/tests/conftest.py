import numpy as np
import pytest

from panomix.core import Layout, Panorama, Sample, SemanticMask, lat_to_row
from panomix.synth import SceneParams, SceneSpec, Texture, random_scene, render_scene

H, W = 128, 256


def centered_square_spec(half=1.5, ceiling=1.5, boxes=(), class_names=None):
    names = class_names if class_names is not None else ("ceiling", "floor", "wall") + tuple(
        b.class_name for b in boxes
    )
    textures = {
        "ceiling": Texture(color=(0.9, 0.9, 0.9)),
        "floor": Texture(color=(0.2, 0.2, 0.2)),
        "wall_px": Texture(color=(0.8, 0.2, 0.2)),
        "wall_nx": Texture(color=(0.2, 0.8, 0.2)),
        "wall_pz": Texture(color=(0.2, 0.2, 0.8)),
        "wall_nz": Texture(color=(0.8, 0.8, 0.2)),
    }
    return SceneSpec(
        half_x=half, half_z=half, ceiling=ceiling, textures=textures,
        boxes=boxes, class_names=names,
    )


def square_layout(height=H, width=W, half=1.5, ceiling=1.5):
    """Analytic layout of a centered square room (camera at the center)."""
    dist = half * np.sqrt(2.0)
    cols = np.array([0.125, 0.375, 0.625, 0.875]) * width - 0.5
    ceil_row = float(lat_to_row(np.arctan2(ceiling, dist), height))
    floor_row = float(lat_to_row(np.arctan2(-1.0, dist), height))
    return Layout([[c, ceil_row, floor_row] for c in cols])


def flat_sample(height=H, width=W, color=(0.5, 0.5, 0.5), label=0, names=("ceiling", "floor", "wall")):
    img = np.full((height, width, 3), color, dtype=np.float64)
    lab = np.full((height, width), label, dtype=np.int32)
    return Sample(Panorama(img), SemanticMask(lab, names), square_layout(height, width))


def erode_wrap(mask: np.ndarray) -> np.ndarray:
    """3x3 binary erosion with circular columns and replicated rows."""
    padded = np.pad(mask, ((1, 1), (0, 0)), mode="edge")
    padded = np.concatenate([padded[:, -1:], padded, padded[:, :1]], axis=1)
    out = np.ones_like(mask)
    h, w = mask.shape
    for dy in range(3):
        for dx in range(3):
            out &= padded[dy : dy + h, dx : dx + w]
    return out


def boundary_agreement(labels: np.ndarray, class_names, bmap, tol=1.0):
    """Fraction of measurable per-column boundary transitions that land
    within ``tol`` pixels of the analytic boundary curves.

    A transition is measurable when the pixel just past it is a structure
    class (foreground there means the boundary is occluded).
    """
    names = list(class_names)
    ceiling_id = names.index("ceiling")
    floor_id = names.index("floor")
    fg_ids = np.array(
        [i for i, n in enumerate(names) if n not in ("ceiling", "floor", "wall")],
        dtype=np.int64,
    )
    h, w = labels.shape
    cols = np.arange(w)

    checked = 0
    good = 0

    not_ceiling = labels != ceiling_id
    has = not_ceiling.any(axis=0)
    r_top = not_ceiling.argmax(axis=0)
    occluded = np.isin(labels[r_top, cols], fg_ids)
    use = has & ~occluded
    checked += int(use.sum())
    good += int((np.abs(r_top - bmap.ceil_rows)[use] <= tol).sum())

    not_floor = labels != floor_id
    has_f = not_floor.any(axis=0)
    r_bot = h - 1 - not_floor[::-1].argmax(axis=0)
    occluded_f = np.isin(labels[r_bot, cols], fg_ids)
    use_f = has_f & ~occluded_f
    checked += int(use_f.sum())
    good += int((np.abs((r_bot + 1) - bmap.floor_rows)[use_f] <= tol).sum())

    return good / checked if checked else 1.0


@pytest.fixture(scope="session")
def oracle_sample():
    """One furniture-free rendered scene."""
    return render_scene(random_scene(42, SceneParams(box_count=(0, 0))), H, W)


@pytest.fixture(scope="session")
def oracle_sample_boxes():
    """One rendered scene guaranteed to contain at least one box."""
    for seed in range(100, 200):
        spec = random_scene(seed, SceneParams(box_count=(2, 3)))
        if len(spec.boxes) >= 1:
            return render_scene(spec, H, W)
    raise RuntimeError("no scene with boxes found")
