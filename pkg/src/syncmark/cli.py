"""Command-line interface.

Subcommands: embed, attack, sync, decode, eval, gen-corpus, report.
Exit codes: 0 success, 2 invalid input, 3 decode found no signal,
4 attack placement infeasible. Keys are always explicit arguments; there
is deliberately no environment-variable fallback.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from .attacks import AttackSpec, DistortionSpec, attack_pipeline, sample_attack
from .codec import (
    DEFAULT_LENGTH,
    DEFAULT_STRENGTH,
    MessageBits,
    embed_into_host,
    extract,
    make_plan,
)
from .corpus import generate_corpus
from .errors import NoSignalError, PlacementInfeasibleError
from .evalrun import EvalConfig, run_eval, write_csv
from .metrics import psnr
from .raster import load_image, load_mask, save_image, save_mask
from .sync import synchronize


def _parse_key(text: str) -> int:
    value = int(text, 16)
    if not 0 <= value < 1 << 64:
        raise ValueError(f"key must fit in 64 bits, got {text!r}")
    return value


def _parse_message(text: str, length: int | None) -> MessageBits:
    if text.lower().startswith("0x"):
        if length is None:
            raise ValueError("hex messages need an explicit --length")
        return MessageBits.from_hex(text, length)
    msg = MessageBits.from_string(text)
    if length is not None and len(msg) != length:
        raise ValueError(f"bit string has {len(msg)} bits but --length is {length}")
    return msg


def _cmd_embed(args) -> int:
    host = load_image(args.image)
    mask = load_mask(args.mask)
    msg = _parse_message(args.message, args.length)
    plan = make_plan(_parse_key(args.key), n=args.n, block_size=args.block_size,
                     length=len(msg), strength=args.alpha)
    protected = embed_into_host(host, mask, msg, plan)
    save_image(args.out, protected)
    print(f"embedded {len(msg)} bits; whole-image PSNR {psnr(host, protected):.2f} dB")
    return 0


def _cmd_decode(args) -> int:
    image = load_image(args.image)
    mask = load_mask(args.mask)
    plan = make_plan(_parse_key(args.key), n=args.n, block_size=args.block_size,
                     length=args.length, strength=args.alpha)
    obj, record = synchronize(image, mask, args.n)
    report = extract(obj, plan, record.degenerate_orientation)
    print(report.bits.to_string())
    print(
        f"mean confidence {report.mean_confidence:.3f}; used blocks {report.used_blocks}; "
        f"rotated 180: {report.rotated_180}",
        file=sys.stderr,
    )
    return 0


def _cmd_sync(args) -> int:
    image = load_image(args.image)
    mask = load_mask(args.mask)
    obj, record = synchronize(image, mask, args.n)
    save_image(args.out, obj.canvas)
    base, ext = os.path.splitext(args.out)
    save_mask(base + "_mask" + ext, obj.mask)
    if args.record:
        with open(args.record, "w", encoding="utf-8") as f:
            f.write(record.to_json() + "\n")
    print(
        f"synchronized to {args.n}x{args.n}; phi {math.degrees(record.source_phi):.2f} deg; "
        f"degenerate: {record.degenerate_orientation}"
    )
    return 0


def _parse_distortion(text: str) -> DistortionSpec:
    if "=" not in text:
        return DistortionSpec(text)
    kind, value = text.split("=", 1)
    return DistortionSpec(kind, float(value))


def _cmd_attack(args) -> int:
    image = load_image(args.image)
    mask = load_mask(args.mask)
    background = load_image(args.background)
    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as f:
            spec = AttackSpec.from_dict(json.load(f))
    else:
        spec = sample_attack(
            args.seed, mask, (background.shape[1], background.shape[0])
        )
    distortions = [_parse_distortion(d) for d in args.distort]
    composite, gt_mask = attack_pipeline(
        image, mask, background, spec, distortions, rng_seed=args.seed
    )
    save_image(args.out, composite)
    base, ext = os.path.splitext(args.out)
    save_mask(base + "_mask" + ext, gt_mask)
    print(f"attack: {spec.describe()}; distortions: {[d.describe() for d in distortions]}")
    return 0


def _cmd_eval(args) -> int:
    config = EvalConfig.from_file(args.config)
    if args.out:
        config.out_csv = args.out
    records = run_eval(config)
    write_csv(records, config.out_csv)
    print(f"wrote {len(records)} rows to {config.out_csv}")
    if args.figures:
        from .report import render_report

        for path in render_report(config.out_csv):
            print(f"wrote {path}")
    return 0


def _cmd_gen_corpus(args) -> int:
    paths = generate_corpus(args.out_dir, count=args.count, seed=args.seed)
    print(
        f"wrote {len(paths['images'])} hosts+masks and {len(paths['backgrounds'])} "
        f"backgrounds under {args.out_dir}"
    )
    return 0


def _cmd_report(args) -> int:
    from .report import render_report

    for path in render_report(args.results, args.out_dir):
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syncmark",
        description="Object-aligned blind watermarking with geometric self-synchronization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed a message into the masked object of an image")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--message", required=True, help="bit string or 0x-prefixed hex")
    p.add_argument("--key", required=True, help="64-bit hex key")
    p.add_argument("--alpha", type=float, default=DEFAULT_STRENGTH,
                   help="embedding strength in [0,1] (default 4/255)")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("attack", help="apply a cropping-paste attack plus distortions")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--background", required=True)
    p.add_argument("--spec", default=None, help="JSON AttackSpec file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--distort", action="append", default=[],
                   help="kind=value, repeatable (e.g. gaussian_blur=3)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("sync", help="normalize an object to the canonical canvas")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--out", required=True)
    p.add_argument("--record", default=None, help="write the sync record JSON here")
    p.set_defaults(func=_cmd_sync)

    p = sub.add_parser("decode", help="blind-decode a message from an image")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--key", required=True)
    p.add_argument("--length", type=int, default=DEFAULT_LENGTH)
    p.add_argument("--alpha", type=float, default=DEFAULT_STRENGTH)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--block-size", type=int, default=8)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("eval", help="run the corpus evaluation protocol")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="override the config's CSV path")
    p.add_argument("--figures", action="store_true",
                   help="also render report figures next to the CSV")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("gen-corpus", help="generate the synthetic desk corpus")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("report", help="render figures from a results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PlacementInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except NoSignalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
