"""Full initialization pipeline: COLMAP model + correspondence files -> PLY.

Stages run in a fixed order: load cameras, select reference views, then per
reference view read its neighbor correspondence files, triangulate, filter,
sample, and fit SH colors; finally scales/rotations/opacities are assigned,
optional noise applied, and all splats written as one PLY.

Per-view work is independent (seeds derive from the global seed and the
view id) and may run on a thread pool; results are merged in ascending
reference view order, so the output is byte-identical for any worker count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .camera import CameraSet, CameraView, load_colmap, nearest_neighbors
from .correspondence import colors_filename, corr_filename, read_colors, read_corr
from .sampling import NoEligibleCorrespondences, Thresholds, ViewSample, \
    _pixel_keys, build_view_distribution, sample, view_seed
from .sh import C0, fit_sh_batch
from .splat import IDENTITY_QUAT, inverse_sigmoid, perturb_arrays, write_ply_arrays
from .triangulate import CandidateSet, triangulate_set

logger = logging.getLogger(__name__)

GRAY = 0.5  # fallback color when no sidecar provides real observations


@dataclass
class PipelineConfig:
    """Everything run_pipeline needs; defaults follow the reference setup
    (up to 180 reference views, 2 neighbors, 20K samples per view,
    tau_corr 0.05, tau_proj 0.01)."""

    colmap_dir: Path
    corr_dir: Path
    output_path: Path
    max_ref_views: int = 180
    num_neighbors: int = 2
    samples_per_ref: int = 20000
    tau_corr: float = 0.05
    tau_proj: float = 0.01
    k_scale: float = 1.0
    seed: int = 0
    noise_sigma_xyz: float = 0.0
    noise_sigma_rgb: float = 0.0
    workers: int = 1
    init_opacity: float = 0.1
    sh_exclude_dc: bool = False

    def __post_init__(self):
        self.colmap_dir = Path(self.colmap_dir)
        self.corr_dir = Path(self.corr_dir)
        self.output_path = Path(self.output_path)
        for name in ("max_ref_views", "num_neighbors", "samples_per_ref", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.k_scale <= 0.0:
            raise ValueError("k_scale must be positive")
        if self.noise_sigma_xyz < 0.0 or self.noise_sigma_rgb < 0.0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0.0 < self.init_opacity < 1.0:
            raise ValueError("init_opacity must lie strictly in (0, 1)")
        self.thresholds  # fail fast on bad tau values

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.tau_corr, self.tau_proj)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("colmap_dir", "corr_dir", "output_path"):
            d[key] = str(d[key])
        return d


@dataclass(frozen=True)
class ViewReport:
    ref_view_id: int
    matched: int
    eligible: int
    sampled: int


@dataclass
class PipelineReport:
    """Run statistics: per-view counts, stage timings, warnings.

    stage_seconds sums each stage's time across reference views (views may
    overlap on a thread pool); wall_seconds is the end-to-end clock.
    """

    views: list[ViewReport] = field(default_factory=list)
    total_splats: int = 0
    stage_seconds: dict = field(default_factory=dict)
    wall_seconds: float = 0.0
    warnings: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "total_splats": self.total_splats,
            "wall_seconds": self.wall_seconds,
            "stage_seconds": dict(self.stage_seconds),
            "warnings": list(self.warnings),
            "views": [asdict(v) for v in self.views],
        }


def select_reference_views(cams: CameraSet, max_refs: int) -> list[int]:
    """All view ids, or an evenly strided subset when the scene is larger."""
    if max_refs < 1:
        raise ValueError("max_refs must be >= 1")
    ids = [v.id for v in cams]
    n = len(ids)
    if n <= max_refs:
        return ids
    picks = np.floor(np.arange(max_refs) * n / max_refs).astype(int)
    return [ids[i] for i in picks]


@dataclass
class _ViewResult:
    report: ViewReport
    positions: np.ndarray
    sh: np.ndarray
    scale_log: np.ndarray
    warnings: list[str]
    timings: dict


def _empty_result(ref_id: int, matched: int, eligible: int,
                  warnings: list[str], timings: dict) -> _ViewResult:
    return _ViewResult(ViewReport(ref_id, matched, eligible, 0),
                       np.empty((0, 3)), np.empty((0, 16, 3)),
                       np.empty((0, 3)), warnings, timings)


def _join_by_source_pixel(sample_keys: np.ndarray, cands: CandidateSet) -> np.ndarray:
    """Row index in `cands` whose source pixel matches each key, else -1."""
    keys = _pixel_keys(cands.records)
    if len(keys) == 0:
        return np.full(len(sample_keys), -1, dtype=np.int64)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    pos = np.minimum(np.searchsorted(sorted_keys, sample_keys), len(sorted_keys) - 1)
    return np.where(sorted_keys[pos] == sample_keys, order[pos], -1)


def _fit_view_sh(smp: ViewSample, cand_sets: list[CandidateSet],
                 sidecars: list, positions: np.ndarray,
                 ref_cam: CameraView, neighbor_cams: list[CameraView],
                 exclude_dc: bool) -> np.ndarray:
    """Fit (S, 16, 3) SH coefficients for one view's sampled candidates.

    Observation slots: 0 = reference-view color, 1.. = one per neighbor
    whose correspondence file recorded the same source pixel (and whose
    camera sees the point from the front). Missing sidecars degrade to the
    gray fallback for the reference slot only.
    """
    S = len(smp)
    src, idx = smp.source_index, smp.candidate_index
    n_slots = 1 + len(cand_sets)
    obs = np.zeros((S, n_slots, 3))
    dirs = np.zeros((S, n_slots, 3))
    mask = np.zeros((S, n_slots), dtype=bool)

    # Reference slot: sidecar color of the winning pair, else gray.
    ref_color = np.full((S, 3), GRAY)
    sample_keys = np.empty(S, dtype=np.uint64)
    for s, cands in enumerate(cand_sets):
        rows = np.flatnonzero(src == s)
        if len(rows) == 0:
            continue
        sample_keys[rows] = _pixel_keys(cands.records)[idx[rows]]
        if sidecars[s] is not None:
            ref_color[rows] = sidecars[s][idx[rows], 0]
    d = positions - ref_cam.center
    dirs[:, 0] = d / np.linalg.norm(d, axis=1, keepdims=True)
    obs[:, 0] = ref_color
    mask[:, 0] = True

    for s, cands in enumerate(cand_sets):
        if sidecars[s] is None:
            continue
        cam = neighbor_cams[s]
        own = src == s
        rows = np.where(own, idx, _join_by_source_pixel(sample_keys, cands))
        found = rows >= 0
        depth = (positions @ cam.rotation[2] + cam.translation[2])
        usable = found & (depth > 0)
        obs[usable, 1 + s] = sidecars[s][rows[usable], 1]
        d = positions[usable] - cam.center
        dirs[usable, 1 + s] = d / np.linalg.norm(d, axis=1, keepdims=True)
        mask[usable, 1 + s] = True

    dc_rows = (ref_color - GRAY) / C0
    coeffs = np.zeros((S, 16, 3))
    counts = mask.sum(axis=1)
    for n in np.unique(counts):
        rows = np.flatnonzero(counts == n)
        obs_g = obs[rows][mask[rows]].reshape(len(rows), n, 3)
        dirs_g = dirs[rows][mask[rows]].reshape(len(rows), n, 3)
        if exclude_dc:
            coeffs[rows] = fit_sh_batch(obs_g, dirs_g, dc_rows=dc_rows[rows])
        else:
            fitted = fit_sh_batch(obs_g, dirs_g)
            fitted[:, 0, :] = dc_rows[rows]
            coeffs[rows] = fitted
    return coeffs


def _process_view(cams: CameraSet, ref_id: int, cfg: PipelineConfig) -> _ViewResult:
    warnings: list[str] = []
    timings = {"read_corr": 0.0, "triangulate": 0.0, "sample": 0.0, "sh_fit": 0.0}
    ref = cams.view(ref_id)
    neighbors = nearest_neighbors(ref, cams, cfg.num_neighbors)

    cand_sets: list[CandidateSet] = []
    sidecars: list = []
    neighbor_cams: list[CameraView] = []
    matched = 0
    for nbr in neighbors:
        corr_path = cfg.corr_dir / corr_filename(ref_id, nbr.id)
        if not corr_path.exists():
            warnings.append(f"missing correspondence file: {corr_path.name}")
            continue
        t0 = time.perf_counter()
        cset = read_corr(corr_path)
        timings["read_corr"] += time.perf_counter() - t0
        if (cset.ref_view_id, cset.nbr_view_id) != (ref_id, nbr.id):
            warnings.append(f"{corr_path.name}: header ids "
                            f"({cset.ref_view_id}, {cset.nbr_view_id}) do not match "
                            f"its name; file skipped")
            continue
        colors_path = cfg.corr_dir / colors_filename(ref_id, nbr.id)
        if colors_path.exists():
            sidecars.append(read_colors(colors_path, len(cset)))
        else:
            sidecars.append(None)
            warnings.append(f"missing color sidecar: {colors_path.name} "
                            "(colors fall back to gray)")
        t0 = time.perf_counter()
        cand_sets.append(triangulate_set(cset, cams))
        timings["triangulate"] += time.perf_counter() - t0
        neighbor_cams.append(nbr)
        matched += len(cset)

    t0 = time.perf_counter()
    dist = build_view_distribution(ref_id, cand_sets, cfg.thresholds)
    smp = sample(dist, cfg.samples_per_ref, view_seed(cfg.seed, ref_id))
    timings["sample"] += time.perf_counter() - t0
    eligible = len(dist)
    if len(smp) == 0:
        warnings.append(f"reference view {ref_id} produced no samples")
        return _empty_result(ref_id, matched, eligible, warnings, timings)

    src, idx = smp.source_index, smp.candidate_index
    positions = np.empty((len(smp), 3))
    for s in range(len(cand_sets)):
        rows = np.flatnonzero(src == s)
        positions[rows] = cand_sets[s].positions[idx[rows]]

    t0 = time.perf_counter()
    sh = _fit_view_sh(smp, cand_sets, sidecars, positions, ref,
                      neighbor_cams, cfg.sh_exclude_dc)
    timings["sh_fit"] += time.perf_counter() - t0

    distance = np.linalg.norm(positions - ref.center, axis=1)
    mean_focal = 0.5 * (ref.focal_x + ref.focal_y)
    s_log = np.log(cfg.k_scale * distance / mean_focal)
    scale_log = np.repeat(s_log[:, None], 3, axis=1)

    return _ViewResult(ViewReport(ref_id, matched, eligible, len(smp)),
                       positions, sh, scale_log, warnings, timings)


def run_pipeline(cfg: PipelineConfig) -> PipelineReport:
    """Execute the full initialization and write the output PLY."""
    report = PipelineReport(config=cfg.to_dict())
    start = time.perf_counter()

    t0 = time.perf_counter()
    cams = load_colmap(cfg.colmap_dir)
    report.stage_seconds["load_cameras"] = time.perf_counter() - t0

    ref_ids = select_reference_views(cams, cfg.max_ref_views)
    logger.info("processing %d reference views (%d cameras registered)",
                len(ref_ids), len(cams))

    if cfg.workers == 1:
        results = [_process_view(cams, rid, cfg) for rid in ref_ids]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda rid: _process_view(cams, rid, cfg),
                                    ref_ids))
    results.sort(key=lambda r: r.report.ref_view_id)

    for r in results:
        report.views.append(r.report)
        report.warnings.extend(r.warnings)
        for stage, seconds in r.timings.items():
            report.stage_seconds[stage] = report.stage_seconds.get(stage, 0.0) + seconds
        if r.report.sampled == 0:
            logger.warning("reference view %d contributed no splats",
                           r.report.ref_view_id)

    total = sum(r.report.sampled for r in results)
    if total == 0:
        raise NoEligibleCorrespondences("no eligible correspondences in scene")

    t0 = time.perf_counter()
    positions = np.concatenate([r.positions for r in results])
    sh = np.concatenate([r.sh for r in results])
    scale_log = np.concatenate([r.scale_log for r in results])
    opacity = np.full(total, inverse_sigmoid(cfg.init_opacity))
    rotation = np.tile(np.asarray(IDENTITY_QUAT), (total, 1))
    if cfg.noise_sigma_xyz > 0.0 or cfg.noise_sigma_rgb > 0.0:
        positions, sh = perturb_arrays(positions, sh, cfg.noise_sigma_xyz,
                                       cfg.noise_sigma_rgb, cfg.seed)
    report.stage_seconds["assemble"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cfg.output_path.parent.mkdir(parents=True, exist_ok=True)
    write_ply_arrays(positions, sh, opacity, scale_log, rotation, cfg.output_path)
    report.stage_seconds["export"] = time.perf_counter() - t0

    report.total_splats = total
    report.wall_seconds = time.perf_counter() - start
    logger.info("wrote %d splats to %s in %.2fs", total, cfg.output_path,
                report.wall_seconds)
    return report


def neighbor_plan(cams: CameraSet, max_refs: int, num_neighbors: int) -> dict:
    """Pairing plan for an external matcher: image pairs plus an id map."""
    pairs = []
    for rid in select_reference_views(cams, max_refs):
        ref = cams.view(rid)
        for nbr in nearest_neighbors(ref, cams, num_neighbors):
            pairs.append([ref.image_name, nbr.image_name])
    images = [{"view_id": v.id, "name": v.image_name,
               "width": v.width, "height": v.height} for v in cams]
    return {"pairs": pairs, "images": images}
