"""Orchestration: fuse style, align furniture, composite, and run offline
batches over sample triples with deterministic seeding.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import Sample, flip_horizontal, roll_columns, validate_sample
from .errors import (
    BatchAbortError,
    ConfigError,
    EmptyDatasetError,
    PanomixError,
    PipelineStageError,
)
from .furniture import VerticalPolicy, align_sample, composite, default_foreground_classes
from .style import StyleFuserConfig, fuse_style

_EXTRA_STREAM = 2


@dataclass(frozen=True)
class AugmentConfig:
    """Everything that determines one augmentation besides the sample triple."""

    style: StyleFuserConfig = StyleFuserConfig()
    vertical: VerticalPolicy = VerticalPolicy()
    foreground_classes: tuple | None = None
    horizontal: str = "plan_fraction"
    extra_roll: bool = False
    extra_flip: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.horizontal not in ("plan_fraction", "linear"):
            raise ConfigError(f"unknown horizontal mode {self.horizontal!r}")
        if self.foreground_classes is not None:
            object.__setattr__(self, "foreground_classes", tuple(self.foreground_classes))


@dataclass(frozen=True)
class TripleSpec:
    structure_id: str
    style_id: str
    furniture_id: str


def config_to_dict(cfg: AugmentConfig) -> dict:
    return {
        "style": {
            "strategy": cfg.style.strategy,
            "color_space": cfg.style.color_space,
            "noise_seed": cfg.style.noise_seed,
            "fill_policy": cfg.style.fill_policy,
            "wall_offset": cfg.style.wall_offset,
        },
        "vertical": {
            "mode": cfg.vertical.mode,
            "alpha": cfg.vertical.alpha,
            "beta": cfg.vertical.beta,
        },
        "foreground_classes": list(cfg.foreground_classes)
        if cfg.foreground_classes is not None
        else None,
        "horizontal": cfg.horizontal,
        "extra": {"roll": cfg.extra_roll, "flip": cfg.extra_flip},
        "seed": cfg.seed,
    }


def _check_keys(data: dict, allowed, where: str):
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in {where}")


def config_from_dict(data: dict) -> AugmentConfig:
    _check_keys(data, ("style", "vertical", "foreground_classes", "horizontal", "extra", "seed"), "config")
    style_d = dict(data.get("style", {}))
    _check_keys(style_d, ("strategy", "color_space", "noise_seed", "fill_policy", "wall_offset"), "config.style")
    vert_d = dict(data.get("vertical", {}))
    _check_keys(vert_d, ("mode", "alpha", "beta"), "config.vertical")
    extra_d = dict(data.get("extra", {}))
    _check_keys(extra_d, ("roll", "flip"), "config.extra")
    fg = data.get("foreground_classes")
    return AugmentConfig(
        style=StyleFuserConfig(**style_d),
        vertical=VerticalPolicy(**vert_d),
        foreground_classes=tuple(fg) if fg is not None else None,
        horizontal=data.get("horizontal", "plan_fraction"),
        extra_roll=bool(extra_d.get("roll", False)),
        extra_flip=bool(extra_d.get("flip", False)),
        seed=int(data.get("seed", 0)),
    )


def config_hash(cfg: AugmentConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, PanomixError) and not isinstance(exc, PipelineStageError):
                raise PipelineStageError(name, exc) from exc
            return False

    return _Ctx()


def panomixswap(
    structure: Sample, style: Sample, furniture: Sample, cfg: AugmentConfig | None = None
) -> Sample:
    """Fuse the structure sample's layout, the style sample's background,
    and the furniture sample's foreground into one augmented sample."""
    cfg = cfg if cfg is not None else AugmentConfig()
    with _stage("style_fusing"):
        styled = fuse_style(style, structure.layout, cfg.style, cfg.foreground_classes)
    with _stage("furniture_alignment"):
        warped_img, warped_mask = align_sample(
            furniture, structure.layout, cfg.vertical, cfg.horizontal
        )
    with _stage("compositing"):
        result = composite(
            warped_img, warped_mask, styled, structure.layout, cfg.foreground_classes
        )
    if cfg.extra_roll or cfg.extra_flip:
        rng = np.random.default_rng([cfg.seed, _EXTRA_STREAM])
        if cfg.extra_roll:
            result = roll_columns(result, int(rng.integers(0, result.width)))
        if cfg.extra_flip and rng.random() < 0.5:
            result = flip_horizontal(result)
    violations = validate_sample(result)
    if violations:
        raise PipelineStageError("validation", PanomixError("; ".join(violations)))
    return result


def select_triples(sample_ids, count: int, seed: int) -> list:
    """Draw triples with each role independent and uniform over the ids."""
    ids = list(sample_ids)
    if not ids:
        raise EmptyDatasetError("no samples to draw triples from")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(ids), size=(int(count), 3))
    return [TripleSpec(ids[a], ids[b], ids[c]) for a, b, c in picks]


class InMemoryDataset:
    """Minimal id -> Sample source for library use and tests."""

    def __init__(self, samples: dict):
        self._samples = dict(samples)

    def ids(self):
        return list(self._samples)

    def get(self, sample_id: str) -> Sample:
        if sample_id not in self._samples:
            raise EmptyDatasetError(f"unknown sample id {sample_id!r}")
        return self._samples[sample_id]


class InMemorySink:
    """Collects augmented samples in a dict; entry is the sample id."""

    def __init__(self):
        self.samples = {}

    def write(self, sample_id: str, sample: Sample):
        self.samples[sample_id] = sample
        return {"id": sample_id}


@dataclass
class BatchResult:
    """Provenance manifest of one offline batch."""

    config_hash: str
    seed: int
    outputs: list  # {"id", "sources", "entry"}
    failures: list  # {"id", "sources", "error"}


def derive_seed(seed: int, index: int) -> int:
    """Per-spec RNG stream so parallel scheduling cannot change results."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def batch_augment(dataset, specs, cfg: AugmentConfig, sink, workers: int = 1) -> BatchResult:
    """Generate one augmented sample per spec through the sink.

    Per-spec failures are recorded without aborting; a sink write failure
    aborts with the partial result attached to the raised error.
    """
    cfg = cfg if cfg is not None else AugmentConfig()
    results: list = [None] * len(specs)
    fatal: list = []

    def run_one(index: int, spec: TripleSpec):
        if fatal:
            return
        out_id = f"aug-{index:05d}"
        sources = {
            "structure": spec.structure_id,
            "style": spec.style_id,
            "furniture": spec.furniture_id,
        }
        try:
            child = derive_seed(cfg.seed, index)
            cfg_i = replace(cfg, seed=child, style=replace(cfg.style, noise_seed=child))
            sample = panomixswap(
                dataset.get(spec.structure_id),
                dataset.get(spec.style_id),
                dataset.get(spec.furniture_id),
                cfg_i,
            )
            entry = sink.write(out_id, sample)
            results[index] = ("ok", {"id": out_id, "sources": sources, "entry": entry})
        except OSError as e:
            fatal.append(e)
        except PanomixError as e:
            results[index] = ("fail", {"id": out_id, "sources": sources, "error": str(e)})

    if workers <= 1:
        for i, spec in enumerate(specs):
            run_one(i, spec)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_one, range(len(specs)), specs))

    outputs = [r[1] for r in results if r is not None and r[0] == "ok"]
    failures = [r[1] for r in results if r is not None and r[0] == "fail"]
    result = BatchResult(
        config_hash=config_hash(cfg), seed=cfg.seed, outputs=outputs, failures=failures
    )
    if fatal:
        raise BatchAbortError(fatal[0], result)
    return result
