"""Command-line interface.

    edgs-match --images renders/ --plan plan.json --out matches/

The plan comes from `edgs-init --emit-plan`. Exit codes: 0 success,
2 configuration or input error, 3 when the selected matching backend
is unavailable.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .adapter import DEFAULT_MAX_RECORDS, DEFAULT_MIN_CONFIDENCE, export_plan
from .backends import BACKENDS, MatcherUnavailable
from .plan import load_plan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgs-match",
        description="Match planned image pairs with a dense matcher and "
                    "write EDGC correspondence files.")
    parser.add_argument("--images", type=Path, required=True,
                        help="directory holding the plan's images")
    parser.add_argument("--plan", type=Path, required=True,
                        help="pairing plan JSON (from edgs-init --emit-plan)")
    parser.add_argument("--out", type=Path, required=True,
                        help="output directory for corr_<ref>_<nbr>.edgc files")
    parser.add_argument("--max-records", type=int, default=DEFAULT_MAX_RECORDS,
                        help="record cap per pair")
    parser.add_argument("--backend", default="auto",
                        choices=("auto", *sorted(BACKENDS)),
                        help="dense matching backend")
    parser.add_argument("--min-confidence", type=float,
                        default=DEFAULT_MIN_CONFIDENCE,
                        help="drop matches below this confidence")
    parser.add_argument("--no-colors", action="store_true",
                        help="skip the RGB sidecar files")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if not args.images.is_dir():
        print(f"error: image directory not found: {args.images}",
              file=sys.stderr)
        return EXIT_CONFIG
    if not args.plan.is_file():
        print(f"error: plan file not found: {args.plan}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        plan = load_plan(args.plan)
        written = export_plan(plan, args.images, args.out,
                              backend=args.backend,
                              max_records=args.max_records,
                              min_confidence=args.min_confidence,
                              write_color_sidecar=not args.no_colors)
    except MatcherUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    logger.info("wrote %d correspondence files to %s", len(written), args.out)
    return EXIT_OK
