"""Command line entry point: scvad-extract {extract,verify}."""

import argparse
import logging
import sys

from .extractor import ExtractionError, ExtractorConfig, extract
from .verify import verify_stream


def _parse_grid(text):
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="scvad-extract")
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="video or frame directory -> SCVF stream")
    ex.add_argument("--video", required=True, help="video file or directory of frames")
    ex.add_argument("--out", required=True, help="output .scvf path")
    ex.add_argument("--flow-grid", type=_parse_grid, default=(8, 8), metavar="HxW")
    ex.add_argument("--stride", type=int, default=1)
    ex.add_argument("--spatial-backbone", default="resnet18",
                    help="'resnet18' (seeded init) or a local state-dict path")
    ex.add_argument("--flow-backbone", default="farneback")
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--input-size", type=int, default=160)
    ex.add_argument("--norm-frames", type=int, default=50)
    ex.add_argument("--no-normalize", action="store_true")
    ex.add_argument("--skip-bad-frames", action="store_true")

    vf = sub.add_parser("verify", help="check an SCVF stream and print a report")
    vf.add_argument("path")
    return parser


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "verify":
        report = verify_stream(args.path)
        print(report.summary())
        return 0 if report.ok else 1
    config = ExtractorConfig(
        video=args.video,
        output=args.out,
        spatial_backbone=args.spatial_backbone,
        flow_backbone=args.flow_backbone,
        flow_grid=args.flow_grid,
        stride=args.stride,
        input_size=args.input_size,
        seed=args.seed,
        norm_frames=args.norm_frames,
        normalize=not args.no_normalize,
        skip_bad_frames=args.skip_bad_frames,
    )
    try:
        path = extract(config)
    except ExtractionError as exc:
        print(f"scvad-extract: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
