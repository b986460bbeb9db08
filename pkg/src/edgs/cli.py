"""Command-line interface.

    edgs-init --colmap-dir sparse/0 --corr-dir matches/ --out init.ply

Exit codes: 0 success, 2 configuration or input error, 3 when no
correspondence in the whole scene passed the eligibility thresholds.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .camera import load_colmap
from .pipeline import PipelineConfig, neighbor_plan, run_pipeline
from .sampling import NoEligibleCorrespondences

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_ELIGIBLE = 3

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edgs-init",
        description="Initialize 3D Gaussian splats from COLMAP cameras and "
                    "dense correspondence files.")
    parser.add_argument("--colmap-dir", type=Path, required=True,
                        help="directory holding cameras.txt and images.txt")
    parser.add_argument("--corr-dir", type=Path,
                        help="directory holding corr_<ref>_<nbr>.edgc files")
    parser.add_argument("--out", type=Path, help="output PLY path")
    parser.add_argument("--max-refs", type=int, default=180,
                        help="cap on reference views (evenly strided subset)")
    parser.add_argument("--neighbors", type=int, default=2,
                        help="nearest neighbor views per reference view")
    parser.add_argument("--samples-per-ref", type=int, default=20000,
                        help="correspondences sampled per reference view")
    parser.add_argument("--tau-corr", type=float, default=0.05,
                        help="confidence threshold (strict >)")
    parser.add_argument("--tau-proj", type=float, default=0.01,
                        help="max NDC reprojection error (strict <)")
    parser.add_argument("--k-scale", type=float, default=1.0,
                        help="scale proportionality constant")
    parser.add_argument("--seed", type=int, default=0, help="sampling seed")
    parser.add_argument("--noise-sigma-xyz", type=float, default=0.0,
                        help="Gaussian noise on positions, scene units")
    parser.add_argument("--noise-sigma-rgb", type=float, default=0.0,
                        help="Gaussian noise on DC colors, color units")
    parser.add_argument("--report", type=Path,
                        help="write a JSON run report (plus CSV and figures) here")
    parser.add_argument("--workers", type=int, default=1,
                        help="thread count for per-view stages")
    parser.add_argument("--sh-exclude-dc", action="store_true",
                        help="fit higher SH orders with the DC column removed "
                             "instead of overwriting the DC after the fit")
    parser.add_argument("--emit-plan", type=Path, metavar="PLAN_JSON",
                        help="write the matcher pairing plan and exit "
                             "(no correspondence input needed)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.emit_plan is not None:
        try:
            cams = load_colmap(args.colmap_dir)
            plan = neighbor_plan(cams, args.max_refs, args.neighbors)
            args.emit_plan.parent.mkdir(parents=True, exist_ok=True)
            with open(args.emit_plan, "w") as fh:
                json.dump(plan, fh, indent=2)
                fh.write("\n")
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        logger.info("wrote pairing plan with %d pairs to %s",
                    len(plan["pairs"]), args.emit_plan)
        return EXIT_OK

    if args.corr_dir is None or args.out is None:
        parser.error("--corr-dir and --out are required unless --emit-plan is used")

    try:
        cfg = PipelineConfig(
            colmap_dir=args.colmap_dir, corr_dir=args.corr_dir,
            output_path=args.out, max_ref_views=args.max_refs,
            num_neighbors=args.neighbors, samples_per_ref=args.samples_per_ref,
            tau_corr=args.tau_corr, tau_proj=args.tau_proj,
            k_scale=args.k_scale, seed=args.seed,
            noise_sigma_xyz=args.noise_sigma_xyz,
            noise_sigma_rgb=args.noise_sigma_rgb,
            workers=args.workers, sh_exclude_dc=args.sh_exclude_dc)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        report = run_pipeline(cfg)
    except NoEligibleCorrespondences as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ELIGIBLE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for line in report.warnings:
        logger.warning("%s", line)
    if args.report is not None:
        from .report import write_report
        for p in write_report(report, args.report):
            logger.info("report artifact: %s", p)
    return EXIT_OK
