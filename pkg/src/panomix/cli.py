"""Command-line interface.

Commands: augment, batch, stretch, synth, validate. Exit codes: 0 on
success, 1 for validation/config errors, 2 for I/O errors, 3 when a batch
finished with recorded per-sample failures. Errors print one JSON object
on stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .core import validate_sample
from .errors import BatchAbortError, PanomixError
from .geometry import panostretch_image
from .manifest import (
    DatasetManifest,
    DirectorySink,
    ManifestDataset,
    batch_manifest,
    read_manifest,
    store_sample,
    write_manifest,
)
from .pipeline import (
    AugmentConfig,
    BatchResult,
    TripleSpec,
    batch_augment,
    config_from_dict,
    config_hash,
    panomixswap,
    select_triples,
)
from .synth import SceneParams, random_scene, render_scene


def _load_config(path, seed: int | None) -> AugmentConfig:
    if path is None:
        data = {}
    else:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    cfg = config_from_dict(data)
    if seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=int(seed), style=replace(cfg.style, noise_seed=int(seed)))
    return cfg


def _cmd_augment(args) -> int:
    dataset = ManifestDataset.open(args.manifest)
    cfg = _load_config(args.config, args.seed)
    sample = panomixswap(
        dataset.get(args.structure),
        dataset.get(args.style),
        dataset.get(args.furniture),
        cfg,
    )
    out_id = "aug-00000"
    entry = store_sample(sample, args.out, out_id)
    manifest = DatasetManifest(
        width=sample.width,
        height=sample.height,
        classes=list(sample.mask.class_names),
        samples=[entry],
        provenance={
            "config_hash": config_hash(cfg),
            "seed": cfg.seed,
            "sources": {
                out_id: {
                    "structure": args.structure,
                    "style": args.style,
                    "furniture": args.furniture,
                }
            },
            "failures": [],
        },
    )
    write_manifest(manifest, os.path.join(args.out, "manifest.json"))
    print(os.path.join(args.out, f"{out_id}.png"))
    return 0


def _flush_batch(result: BatchResult, dataset: ManifestDataset, out_dir) -> None:
    manifest = batch_manifest(
        result,
        dataset.manifest.width,
        dataset.manifest.height,
        dataset.manifest.classes,
    )
    write_manifest(manifest, os.path.join(out_dir, "manifest.json"))


def _cmd_batch(args) -> int:
    dataset = ManifestDataset.open(args.manifest)
    cfg = _load_config(args.config, args.seed)
    specs = select_triples(dataset.ids(), args.count, cfg.seed)
    sink = DirectorySink(args.out)
    try:
        result = batch_augment(dataset, specs, cfg, sink, workers=args.workers)
    except BatchAbortError as e:
        _flush_batch(e.partial, dataset, args.out)
        raise
    _flush_batch(result, dataset, args.out)
    print(f"{len(result.outputs)} samples written, {len(result.failures)} failures")
    if result.failures:
        _print_error("PartialBatchFailure", f"{len(result.failures)} of {len(specs)} triples failed")
        return 3
    return 0


def _cmd_stretch(args) -> int:
    dataset = ManifestDataset.open(args.manifest)
    sample = panostretch_image(dataset.get(args.id), args.kx, args.kz)
    out_id = f"{args.id}-stretched"
    entry = store_sample(sample, args.out, out_id)
    manifest = DatasetManifest(
        width=sample.width,
        height=sample.height,
        classes=list(sample.mask.class_names),
        samples=[entry],
    )
    write_manifest(manifest, os.path.join(args.out, "manifest.json"))
    print(os.path.join(args.out, f"{out_id}.png"))
    return 0


def _cmd_synth(args) -> int:
    params = SceneParams(box_count=(args.min_boxes, args.max_boxes))
    entries = []
    classes = None
    for i in range(args.count):
        spec = random_scene([args.seed, i], params)
        sample = render_scene(spec, args.height, args.width)
        classes = list(sample.mask.class_names)
        entries.append(store_sample(sample, args.out, f"scene-{i:04d}"))
    manifest = DatasetManifest(
        width=args.width,
        height=args.height,
        classes=classes if classes is not None else [],
        samples=entries,
    )
    write_manifest(manifest, os.path.join(args.out, "manifest.json"))
    print(f"{args.count} scenes written to {args.out}")
    return 0


def _cmd_validate(args) -> int:
    dataset = ManifestDataset.open(args.manifest)
    bad = 0
    for sample_id in dataset.ids():
        violations = validate_sample(dataset.get(sample_id))
        if violations:
            bad += 1
            for v in violations:
                print(f"{sample_id}: {v}")
        else:
            print(f"{sample_id}: ok")
    if bad:
        _print_error("ValidationFailure", f"{bad} samples have violations")
        return 1
    return 0


def _print_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panomix", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("augment", help="fuse one (structure, style, furniture) triple")
    p.add_argument("--manifest", required=True)
    p.add_argument("--structure", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--furniture", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("batch", help="generate an augmented set offline")
    p.add_argument("--manifest", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_batch)

    p = sub.add_parser("stretch", help="pano-stretch one sample")
    p.add_argument("--manifest", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--kx", type=float, required=True)
    p.add_argument("--kz", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stretch)

    p = sub.add_parser("synth", help="render synthetic cuboid-room samples")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--min-boxes", type=int, default=0)
    p.add_argument("--max-boxes", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("validate", help="check every sample in a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BatchAbortError as e:
        _print_error(type(e).__name__, str(e))
        return 2
    except OSError as e:
        _print_error(type(e).__name__, str(e))
        return 2
    except PanomixError as e:
        _print_error(type(e).__name__, str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
