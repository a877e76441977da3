"""Command-line interface.

Subcommands: train-codebook, encode, decode, stats, rate-table, inspect.
Flags override keys of an optional plain-text `granucodec.conf`
(key=value per line, '#' comments); see --help of each subcommand.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bitstream, granularity, imaging, pipeline, training, vq
from .granularity import RatioTriple
from .spatial_entropy import EntropyConfig, entropy_map

CONFIG_FILE = "granucodec.conf"


def _load_config(path: str | None) -> dict[str, str]:
    path = path or CONFIG_FILE
    conf: dict[str, str] = {}
    if os.path.exists(path):
        with open(path) as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise SystemExit(f"{path}: bad config line {line!r}")
                key, value = line.split("=", 1)
                conf[key.strip()] = value.strip()
    return conf

def _conf_default(conf: dict[str, str], key: str, fallback, cast=str):
    return cast(conf[key]) if key in conf else fallback


def _parse_ratios(text: str) -> RatioTriple:
    try:
        r1, r2, r3 = (float(p) for p in text.split(","))
        return RatioTriple(r1, r2, r3)
    except ValueError as exc:
        raise SystemExit(f"bad --ratios {text!r}: {exc}")


def _session(args) -> pipeline.CodecSession:
    return pipeline.CodecSession.from_file(args.codebook)


def cmd_train_codebook(args) -> int:
    paths = sorted(
        os.path.join(args.corpus, n) for n in os.listdir(args.corpus)
        if n.lower().endswith(".ppm"))
    if not paths:
        raise SystemExit(f"no .ppm files in {args.corpus}")
    images = [imaging.load_ppm(p) for p in paths]
    cb, tbl = training.train_codebook(
        images, k=args.k, seed=args.seed, iters=args.iters,
        max_samples=args.max_samples,
        freq_ratios=_parse_ratios(args.freq_ratios))
    vq.save_codebook(cb, tbl, args.out)
    print(f"trained k={cb.k} d={cb.d} codebook from {len(images)} images -> {args.out}")
    return 0


def cmd_encode(args) -> int:
    session = _session(args)
    img = imaging.load_ppm(args.input)
    if (args.ratios is None) == (args.bpp is None):
        raise SystemExit("give exactly one of --ratios or --bpp")
    container = pipeline.encode_image(
        session, img,
        ratios=_parse_ratios(args.ratios) if args.ratios else None,
        target_bpp=args.bpp)
    with open(args.out, "wb") as f:
        f.write(bitstream.serialize_container(container))
    total, payload = bitstream.measure_rate(container)
    r = container.ratios
    print(f"encoded {args.input} at ratios ({r.r1:.4f}, {r.r2:.4f}, {r.r3:.4f}): "
          f"{total:.4f} bpp ({payload:.4f} payload-only)")
    return 0


def cmd_decode(args) -> int:
    session = _session(args)
    with open(args.input, "rb") as f:
        container = bitstream.parse_container(f.read())
    img = pipeline.decode_image(session, container)
    imaging.save_ppm(img, args.out)
    print(f"decoded {args.input} -> {args.out} ({img.true_w}x{img.true_h})")
    return 0


def cmd_stats(args) -> int:
    session = _session(args)
    img = imaging.load_ppm(args.input)
    if (args.ratios is None) == (args.bpp is None):
        raise SystemExit("give exactly one of --ratios or --bpp")
    ratios = (_parse_ratios(args.ratios) if args.ratios
              else granularity.ratios_for_target(session.rate_table, args.bpp))
    container = pipeline.encode_image(session, img, ratios=ratios)
    recon = pipeline.decode_image(session, container)
    total, payload = bitstream.measure_rate(container)
    gmap, _ = pipeline.decode_streams(session, container)
    counts = granularity.label_counts(gmap)
    quality = imaging.psnr(img, recon)
    stats = {
        "ratios": list(ratios.as_tuple()),
        "theoretical_bpp": granularity.theoretical_bpp(ratios, session.mean_code_len),
        "actual_bpp": total,
        "payload_bpp": payload,
        "psnr_db": None if quality == imaging.LOSSLESS else quality,
        "lossless": quality == imaging.LOSSLESS,
        "blocks": {granularity.LABEL_NAMES[k]: v for k, v in counts.items()},
        "mean_code_length": session.mean_code_len,
    }
    if args.json:
        print(json.dumps(stats))
    else:
        for key, value in stats.items():
            print(f"{key}: {value}")
    if args.entropy_csv:
        emap = entropy_map(img, session.entropy_cfg)
        with open(args.entropy_csv, "w") as f:
            f.write("row,col,entropy\n")
            for (row, col), h in np.ndenumerate(emap):
                f.write(f"{row},{col},{h:.9f}\n")
    return 0


def cmd_rate_table(args) -> int:
    session = _session(args)
    table = granularity.build_rate_table(session.mean_code_len, args.step)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        out.write("r1,r2,r3,bpp\n")
        for ratios, bpp in table.rows:
            out.write(f"{ratios.r1:.6f},{ratios.r2:.6f},{ratios.r3:.6f},{bpp:.6f}\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_inspect(args) -> int:
    with open(args.input, "rb") as f:
        c = bitstream.parse_container(f.read())
    total, payload = bitstream.measure_rate(c)
    info = {
        "true_size": [c.true_w, c.true_h],
        "padded_size": [c.padded_w, c.padded_h],
        "codebook_hash": f"{c.codebook_hash:016x}",
        "ratios": list(c.ratios.as_tuple()),
        "index_bits": list(c.index_bits),
        "map_bits": c.map_bits,
        "byte_length": c.byte_length,
        "actual_bpp": total,
        "payload_bpp": payload,
    }
    if args.json:
        print(json.dumps(info))
    else:
        for key, value in info.items():
            print(f"{key}: {value}")
    return 0


def build_parser(conf: dict[str, str]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="granucodec",
        description="Variable-rate block-granularity VQ image codec")
    parser.add_argument("--config", help="config file (default granucodec.conf)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-codebook", help="k-means codebook + frequency table")
    p.add_argument("--corpus", required=True, help="directory of .ppm images")
    p.add_argument("--k", type=int, default=_conf_default(conf, "k", 1024, int))
    p.add_argument("--d", type=int, default=4, help="feature channels (fixed recipe: 4)")
    p.add_argument("--seed", type=int, default=_conf_default(conf, "seed", 0, int))
    p.add_argument("--iters", type=int, default=_conf_default(conf, "iters", 25, int))
    p.add_argument("--max-samples", type=int, default=200_000,
                   help="subsample cap for k-means input")
    p.add_argument("--freq-ratios", default=_conf_default(conf, "freq_ratios", "0.5,0.4,0.1"),
                   help="granularity ratios used for the frequency pass")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_codebook)

    p = sub.add_parser("encode", help="compress a PPM image")
    p.add_argument("--codebook", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", default=None, help="r1,r2,r3 (fine,medium,coarse)")
    p.add_argument("--bpp", type=float, default=None, help="target bits per pixel")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decompress a .cgic container")
    p.add_argument("--codebook", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="encode+decode and report rate/quality")
    p.add_argument("--codebook", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--ratios", default=None)
    p.add_argument("--bpp", type=float, default=None)
    p.add_argument("--json", action="store_true")
    p.add_argument("--entropy-csv", default=None,
                   help="also dump the entropy map as CSV")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("rate-table", help="dump the ratio->bpp query table")
    p.add_argument("--codebook", required=True)
    p.add_argument("--step", type=float, default=_conf_default(conf, "step", 0.01, float))
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_rate_table)

    p = sub.add_parser("inspect", help="dump container header fields")
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    # peek at --config before building defaults from it
    config_path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif arg.startswith("--config="):
            config_path = arg.split("=", 1)[1]
    conf = _load_config(config_path)
    args = build_parser(conf).parse_args(argv)
    try:
        return args.func(args)
    except (imaging.ImageError, vq.CodebookError, bitstream.BitstreamError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
