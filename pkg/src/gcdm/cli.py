"""`gcdm` command-line entry point.

Subcommands: phantom-gen, radiomics, radiomics-fit, train, sample, eval,
sweep, inspect-ckpt. Every run is deterministic given its flags and seeds;
exit codes are 0 (success), 1 (usage error), 2 (runtime failure).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcdm",
        description="Mask-conditioned phantom diffusion with a gated lesion-control branch.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("phantom-gen", help="generate a phantom dataset with a manifest")
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--size", type=int, default=64, help="image size in pixels")
    p.add_argument("--lesions", default="0..3", help="lesion count range, e.g. 0..3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset directory")

    p = sub.add_parser("radiomics", help="extract the 67 lesion features from one image/mask pair")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True, help="output feature file")

    p = sub.add_parser("radiomics-fit", help="fit feature normalization on a manifest split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="train", choices=("train", "val", "test"))
    p.add_argument("--out", required=True, help="output normalizer file")
    p.add_argument("--template-out", help="also write the manual-sampling template here")

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable; flags win)")

    p = sub.add_parser("sample", help="generate one image from a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mask", required=True, help="tri-channel mask PNG")
    p.add_argument("--radiomics", default="none",
                   help="feature file | template:SEED | none")
    p.add_argument("--steps", type=int)
    p.add_argument("--scale", type=float, help="guidance scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output image PNG")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--steps", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, help="evaluate at most this many samples")
    p.add_argument("--mass-iou-scope", default="mass_only", choices=("mass_only", "all"))
    p.add_argument("--compare-unconditional", action="store_true")
    p.add_argument("--out", required=True, help="output report file")

    p = sub.add_parser("sweep", help="evaluate one checkpoint across soft-label sigmas")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--sigma", default="0,1.0,1.5,2.0,2.5,3.0",
                   help="comma-separated blur widths")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--steps", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int)
    p.add_argument("--out", required=True, help="output sweep file")

    p = sub.add_parser("inspect-ckpt", help="print checkpoint header and tensor table")
    p.add_argument("checkpoint")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handler = _HANDLERS[args.command]
    try:
        handler(args)
    except BrokenPipeError:
        raise
    except Exception as exc:  # runtime failure surface, not a crash
        print(f"gcdm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


def _cmd_phantom_gen(args) -> None:
    from gcdm.data import PhantomSpec, generate_dataset

    lo, _, hi = args.lesions.partition("..")
    spec = PhantomSpec(image_size=args.size, lesion_count=(int(lo), int(hi or lo)))
    manifest = generate_dataset(spec, args.n, args.seed, args.out)
    counts = {s: len(manifest.split(s)) for s in ("train", "val", "test")}
    print(f"wrote {args.n} samples to {args.out} (splits: {counts})")


def _cmd_radiomics(args) -> None:
    from gcdm.data import load_image, load_mask
    from gcdm.radiomics import FEATURE_NAMES, extract

    import os

    image = load_image(args.image)
    mask = load_mask(args.mask)
    vector = extract(image, mask.mass)
    path = Path(args.out)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["gcdm-features 1"] + [
        f"{name}\t{value!r}" for name, value in zip(FEATURE_NAMES, vector)
    ]
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)
    print(f"wrote {len(vector)} features to {path}")


def _cmd_radiomics_fit(args) -> None:
    from gcdm.data import load_image, load_mask
    from gcdm.data.manifest import read_manifest
    from gcdm.radiomics import FeatureNormalizer, FeatureTemplate, extract, save_normalizer, save_template

    manifest = read_manifest(args.manifest)
    vectors = []
    for entry in manifest.split(args.split):
        image_path, mask_path = manifest.resolve(entry)
        vectors.append(extract(load_image(image_path), load_mask(mask_path).mass))
    bearing = [v for v in vectors if v.any()]
    normalizer = FeatureNormalizer.fit(bearing)
    save_normalizer(normalizer, args.out)
    print(f"fitted normalizer on {len(bearing)} mass-bearing of {len(vectors)} samples -> {args.out}")
    if args.template_out:
        save_template(FeatureTemplate.fit(bearing), args.template_out)
        print(f"wrote template -> {args.template_out}")


def _cmd_train(args) -> None:
    from gcdm.config import TrainConfig, apply_overrides, load_config
    from gcdm.diffusion import train

    config = load_config(args.config) if args.config else TrainConfig()
    overrides = {}
    for item in args.set:
        key, _, value = item.partition("=")
        if not _:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    config = apply_overrides(config, overrides)
    path = train(config)
    print(f"checkpoint: {path}")


def _parse_radiomics_arg(arg: str, bundle):
    from gcdm.radiomics import FEATURE_NAMES, sample_manual

    if arg == "none":
        return None
    if arg.startswith("template:"):
        if bundle.template is None:
            raise ValueError("checkpoint carries no feature template")
        return sample_manual(bundle.template, int(arg.split(":", 1)[1]))
    lines = Path(arg).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "gcdm-features 1":
        raise ValueError(f"{arg}: not a gcdm feature file")
    values = np.zeros(len(FEATURE_NAMES))
    for i, line in enumerate(lines[1 : len(FEATURE_NAMES) + 1]):
        name, value = line.split("\t")
        if name != FEATURE_NAMES[i]:
            raise ValueError(f"{arg}: unexpected feature {name!r} at row {i}")
        values[i] = float(value)
    return values


def _cmd_sample(args) -> None:
    from gcdm.data import load_mask, save_image
    from gcdm.diffusion import load_bundle, sample

    bundle = load_bundle(args.checkpoint)
    mask = load_mask(args.mask)
    features = _parse_radiomics_arg(args.radiomics, bundle)
    image = sample(
        bundle,
        mask,
        features,
        seed=args.seed,
        steps=args.steps,
        guidance_scale=args.scale,
    )
    save_image(args.out, image)
    print(f"wrote {args.out}")


def _cmd_eval(args) -> None:
    from gcdm.data.manifest import read_manifest
    from gcdm.diffusion import load_bundle
    from gcdm.metrics import REPORT_KEYS, evaluate, write_report

    bundle = load_bundle(args.checkpoint)
    manifest = read_manifest(args.manifest)
    report = evaluate(
        bundle,
        manifest,
        split=args.split,
        steps=args.steps,
        scale=args.scale,
        seed=args.seed,
        limit=args.limit,
        mass_iou_scope=args.mass_iou_scope,
        compare_unconditional=args.compare_unconditional,
    )
    write_report(report, args.out)
    print("metric            value")
    for key in REPORT_KEYS:
        print(f"{key:<16} {report[key]:8.4f}")
    print(f"report: {args.out}")


def _cmd_sweep(args) -> None:
    from gcdm.data.manifest import read_manifest
    from gcdm.diffusion import load_bundle
    from gcdm.metrics import REPORT_KEYS, sweep_sigma, write_sweep

    bundle = load_bundle(args.checkpoint)
    manifest = read_manifest(args.manifest)
    sigmas = [float(s) for s in args.sigma.split(",") if s.strip()]
    rows = sweep_sigma(
        bundle,
        manifest,
        sigmas=sigmas,
        split=args.split,
        steps=args.steps,
        scale=args.scale,
        seed=args.seed,
        limit=args.limit,
    )
    write_sweep(rows, args.out)
    header = "sigma  " + "  ".join(f"{k:>10}" for k in REPORT_KEYS)
    print(header)
    for sigma, report in rows:
        print(f"{sigma:<5.2f}  " + "  ".join(f"{report[k]:10.4f}" for k in REPORT_KEYS))
    print(f"sweep: {args.out}")


def _cmd_inspect(args) -> None:
    from gcdm.checkpoint import read_header

    header = read_header(args.checkpoint)
    print(f"magic: GCDM  format_version: {header.format_version}")
    print("config:")
    for line in header.config_text.strip().splitlines():
        print(f"  {line}")
    print(f"tensors ({len(header.tensor_specs)}):")
    for name, dtype, shape in header.tensor_specs:
        print(f"  {name}  {dtype}  {shape}")


_HANDLERS = {
    "phantom-gen": _cmd_phantom_gen,
    "radiomics": _cmd_radiomics,
    "radiomics-fit": _cmd_radiomics_fit,
    "train": _cmd_train,
    "sample": _cmd_sample,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "inspect-ckpt": _cmd_inspect,
}


if __name__ == "__main__":
    sys.exit(main())
