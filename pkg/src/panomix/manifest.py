"""Dataset manifest format, PNG sample I/O, and annotation adapters.

A manifest is a strict JSON document:

    {
      "width": 512, "height": 256,
      "classes": ["ceiling", "floor", "wall", ...],
      "samples": [
        {"id": "...", "image": "rel/path.png", "mask": "rel/path.png",
         "layout": [[column, ceil_row, floor_row], ...]},
        ...
      ],
      "provenance": {...}    # optional, for augmented sets
    }

Paths are relative to the manifest file. Images are 8-bit RGB PNG; masks
are 8-bit single-channel PNG with pixel value = class index. Mask value
255 is reserved as "unlabeled" and must be mapped to a class on load.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .core import Layout, Panorama, Sample, SemanticMask
from .errors import AdapterError, ManifestError, SampleLoadError
from .pipeline import BatchResult

UNLABELED_VALUE = 255

_MANIFEST_KEYS = ("width", "height", "classes", "samples", "provenance")
_SAMPLE_KEYS = ("id", "image", "mask", "layout")
_PROVENANCE_KEYS = ("config_hash", "seed", "sources", "failures")


@dataclass
class SampleEntry:
    sample_id: str
    image_path: str
    mask_path: str
    layout: list  # T x [column, ceil_row, floor_row]

    def to_dict(self) -> dict:
        return {
            "id": self.sample_id,
            "image": self.image_path,
            "mask": self.mask_path,
            "layout": [[float(v) for v in corner] for corner in self.layout],
        }


@dataclass
class DatasetManifest:
    width: int
    height: int
    classes: list
    samples: list = field(default_factory=list)
    provenance: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "width": self.width,
            "height": self.height,
            "classes": list(self.classes),
            "samples": [s.to_dict() for s in self.samples],
        }
        if self.provenance is not None:
            out["provenance"] = self.provenance
        return out

    def ids(self) -> list:
        return [s.sample_id for s in self.samples]

    def entry(self, sample_id: str) -> SampleEntry:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise ManifestError(f"no sample with id {sample_id!r}")


def _check_layout_rows(layout, width, height, where):
    arr = np.asarray(layout, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ManifestError(f"{where}: layout must be Tx3, got shape {arr.shape}")
    if arr.shape[0] < 3:
        raise ManifestError(f"{where}: layout needs at least 3 corners")
    cols = arr[:, 0]
    if np.any(cols < 0) or np.any(cols >= width):
        raise ManifestError(f"{where}: corner columns outside [0, {width})")
    if np.any(np.diff(np.sort(cols)) <= 0):
        raise ManifestError(f"{where}: corner columns must be distinct")
    for i, (_, ceil_row, floor_row) in enumerate(arr):
        if not (0 <= ceil_row < floor_row < height):
            raise ManifestError(
                f"{where}: corner {i} rows must satisfy 0 <= ceil < floor < {height}"
            )


def manifest_from_dict(data: dict) -> DatasetManifest:
    if not isinstance(data, dict):
        raise ManifestError("manifest root must be a JSON object")
    for key in data:
        if key not in _MANIFEST_KEYS:
            raise ManifestError(f"unknown manifest key {key!r}")
    for key in ("width", "height", "classes", "samples"):
        if key not in data:
            raise ManifestError(f"manifest missing required key {key!r}")
    width, height = int(data["width"]), int(data["height"])
    classes = [str(c) for c in data["classes"]]
    if len(set(classes)) != len(classes):
        raise ManifestError("duplicate class names")
    samples = []
    seen = set()
    for i, raw in enumerate(data["samples"]):
        where = f"samples[{i}]"
        for key in raw:
            if key not in _SAMPLE_KEYS:
                raise ManifestError(f"{where}: unknown key {key!r}")
        for key in _SAMPLE_KEYS:
            if key not in raw:
                raise ManifestError(f"{where}: missing key {key!r}")
        sid = str(raw["id"])
        if sid in seen:
            raise ManifestError(f"{where}: duplicate sample id {sid!r}")
        seen.add(sid)
        _check_layout_rows(raw["layout"], width, height, f"{where} (id {sid!r})")
        samples.append(SampleEntry(sid, str(raw["image"]), str(raw["mask"]), raw["layout"]))
    provenance = data.get("provenance")
    if provenance is not None:
        for key in provenance:
            if key not in _PROVENANCE_KEYS:
                raise ManifestError(f"provenance: unknown key {key!r}")
    return DatasetManifest(width, height, classes, samples, provenance)


def read_manifest(path) -> DatasetManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise ManifestError(f"{path}: malformed JSON at line {e.lineno}: {e.msg}") from e
    return manifest_from_dict(data)


def write_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def store_sample(sample: Sample, out_dir, sample_id: str) -> SampleEntry:
    """Write image/mask PNGs for a sample; returns its manifest entry."""
    if sample.mask.class_count > UNLABELED_VALUE:
        raise SampleLoadError(
            f"cannot encode {sample.mask.class_count} classes in 8 bits (255 is reserved)"
        )
    os.makedirs(out_dir, exist_ok=True)
    image_name = f"{sample_id}.png"
    mask_name = f"{sample_id}_mask.png"
    img8 = np.clip(np.round(sample.image.pixels * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(img8, mode="RGB").save(os.path.join(out_dir, image_name))
    Image.fromarray(sample.mask.labels.astype(np.uint8), mode="L").save(
        os.path.join(out_dir, mask_name)
    )
    return SampleEntry(
        sample_id,
        image_name,
        mask_name,
        [[float(v) for v in corner] for corner in sample.layout.corners],
    )


def load_sample(
    manifest: DatasetManifest, sample_id: str, root, unlabeled_class: str | None = None
) -> Sample:
    """Load one sample; 8-bit values map to [0, 1] by value/255."""
    entry = manifest.entry(sample_id)
    image_path = os.path.join(root, entry.image_path)
    mask_path = os.path.join(root, entry.mask_path)
    img = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.float64) / 255.0
    labels = np.asarray(Image.open(mask_path), dtype=np.int32)
    if labels.ndim != 2:
        raise SampleLoadError(f"{mask_path}: mask must be single-channel")
    expected = (manifest.height, manifest.width)
    if img.shape[:2] != expected:
        raise SampleLoadError(
            f"{image_path}: image is {img.shape[1]}x{img.shape[0]}, manifest says "
            f"{manifest.width}x{manifest.height}"
        )
    if labels.shape != expected:
        raise SampleLoadError(
            f"{mask_path}: mask is {labels.shape[1]}x{labels.shape[0]}, manifest says "
            f"{manifest.width}x{manifest.height}"
        )
    class_count = len(manifest.classes)
    unlabeled = labels == UNLABELED_VALUE
    if np.any(unlabeled):
        if unlabeled_class is None:
            raise SampleLoadError(
                f"{mask_path}: {int(unlabeled.sum())} unlabeled pixels (value 255) and "
                "no unlabeled_class configured"
            )
        if unlabeled_class not in manifest.classes:
            raise SampleLoadError(f"unlabeled_class {unlabeled_class!r} not in manifest classes")
        labels = np.where(unlabeled, manifest.classes.index(unlabeled_class), labels)
    bad = int(np.count_nonzero(labels >= class_count))
    if bad:
        raise SampleLoadError(
            f"{mask_path}: {bad} pixels carry class indices >= {class_count}"
        )
    return Sample(
        Panorama(img),
        SemanticMask(labels, tuple(manifest.classes)),
        Layout(np.asarray(entry.layout, dtype=np.float64)),
    )


def adapt_corner_txt(txt_path, image_path, mask_path, classes) -> SampleEntry:
    """Convert a corner-annotation text file (2T lines of "x y"; lines 2i
    and 2i+1 share x and give corner i's ceiling and floor rows) into a
    manifest entry."""
    with open(txt_path, "r", encoding="utf-8") as fh:
        rows = []
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise AdapterError(f"{txt_path}:{lineno}: expected 'x y', got {line!r}")
            try:
                rows.append((int(parts[0]), int(parts[1])))
            except ValueError as e:
                raise AdapterError(f"{txt_path}:{lineno}: non-integer coordinate") from e
    if len(rows) % 2 != 0:
        raise AdapterError(f"{txt_path}: odd number of corner lines ({len(rows)})")
    if len(rows) < 6:
        raise AdapterError(f"{txt_path}: need at least 3 corners, got {len(rows) // 2}")
    corners = []
    for i in range(0, len(rows), 2):
        (x_ceil, y_ceil), (x_floor, y_floor) = rows[i], rows[i + 1]
        if x_ceil != x_floor:
            xs = [r[0] for r in rows]
            half = len(rows) // 2
            if xs[:half] == xs[half:]:
                raise AdapterError(
                    f"{txt_path}: corner pair {i // 2} mixes columns {x_ceil} and {x_floor}; "
                    "file looks like all-ceilings-then-all-floors ordering, expected interleaved"
                )
            raise AdapterError(
                f"{txt_path}: corner pair {i // 2} mixes columns {x_ceil} and {x_floor}"
            )
        if not y_ceil < y_floor:
            raise AdapterError(
                f"{txt_path}: corner {i // 2} has floor row {y_floor} not below ceiling row {y_ceil}"
            )
        corners.append([float(x_ceil), float(y_ceil), float(y_floor)])
    corners.sort(key=lambda c: c[0])
    cols = [c[0] for c in corners]
    if any(b - a <= 0 for a, b in zip(cols, cols[1:])):
        raise AdapterError(f"{txt_path}: corner columns not strictly increasing after sort")
    sample_id = os.path.splitext(os.path.basename(txt_path))[0]
    return SampleEntry(sample_id, str(image_path), str(mask_path), corners)


class ManifestDataset:
    """Lazy id -> Sample source backed by a manifest on disk."""

    def __init__(self, manifest: DatasetManifest, root, unlabeled_class: str | None = None):
        self.manifest = manifest
        self.root = root
        self.unlabeled_class = unlabeled_class

    @classmethod
    def open(cls, manifest_path, unlabeled_class: str | None = None):
        manifest = read_manifest(manifest_path)
        return cls(manifest, os.path.dirname(os.path.abspath(manifest_path)), unlabeled_class)

    def ids(self):
        return self.manifest.ids()

    def get(self, sample_id: str) -> Sample:
        return load_sample(self.manifest, sample_id, self.root, self.unlabeled_class)


class DirectorySink:
    """Writes augmented samples as PNG pairs under one directory."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)

    def write(self, sample_id: str, sample: Sample) -> dict:
        entry = store_sample(sample, self.out_dir, sample_id)
        return entry.to_dict()


def batch_manifest(result: BatchResult, width: int, height: int, classes) -> DatasetManifest:
    """Assemble the augmented-set manifest (with provenance) from a batch result."""
    samples = []
    sources = {}
    for out in result.outputs:
        entry = out["entry"]
        samples.append(
            SampleEntry(entry["id"], entry["image"], entry["mask"], entry["layout"])
        )
        sources[out["id"]] = out["sources"]
    provenance = {
        "config_hash": result.config_hash,
        "seed": result.seed,
        "sources": sources,
        "failures": result.failures,
    }
    return DatasetManifest(width, height, list(classes), samples, provenance)
