"""CLI: run the pretrained detector over frames, or render the demo fixture."""

from __future__ import annotations

import argparse
import logging
import sys

from .adapter import AdapterConfig, AdapterError, run_detector
from .fixture import render_face_fixture


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detector-adapter",
        description="Emit a flickermine detection stream from a pretrained face detector.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="detect over extracted frames")
    p.add_argument("--frames", required=True, help="frame root: <root>/<video>/<%%08d>.png")
    p.add_argument("--out", required=True, help="detection stream output (JSONL)")
    p.add_argument("--model", default="lbp-frontal-face")
    p.add_argument("--category", default="face")
    p.add_argument("--score-floor", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--device", default="cpu")
    p.add_argument("--support-levels", type=int, default=12)
    p.add_argument("--min-size", type=int, default=24)

    f = sub.add_parser("fixture", help="render the reference face fixture")
    f.add_argument("--frames", required=True)
    f.add_argument("--n-frames", type=int, default=10)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "fixture":
            render_face_fixture(args.frames, n_frames=args.n_frames)
            return 0
        config = AdapterConfig(
            model=args.model,
            category=args.category,
            score_floor=args.score_floor,
            batch_size=args.batch_size,
            device=args.device,
            support_levels=args.support_levels,
            min_size=args.min_size,
        )
        run_detector(args.frames, config, args.out)
        return 0
    except AdapterError as exc:
        print(f"detector-adapter: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
