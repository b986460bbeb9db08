"""Run a matching backend over planned pairs and write EDGC artifacts.

The dense warp is filtered to confident, in-frame matches and then
subsampled uniformly (even strides over the surviving pixels, so the
selection is deterministic for a deterministic backend) down to the
record cap. Reference coordinates are the integer pixel grid; matched
coordinates are wherever the warp lands, in the neighbor's own pixel
units.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import edgc
from .backends import get_backend
from .plan import NeighborPlan

logger = logging.getLogger(__name__)

DEFAULT_MAX_RECORDS = 20_000
DEFAULT_MIN_CONFIDENCE = 0.5


def load_image(path) -> np.ndarray:
    """Image file as (H, W, 3) float32 RGB in [0, 1]."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0


def _bilinear(image: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """Sample (H, W, 3) at (N, 2) float coordinates, clamped to the frame."""
    height, width = image.shape[:2]
    x = np.clip(xy[:, 0], 0.0, width - 1.0)
    y = np.clip(xy[:, 1], 0.0, height - 1.0)
    x0 = np.clip(np.floor(x).astype(np.int64), 0, width - 2)
    y0 = np.clip(np.floor(y).astype(np.int64), 0, height - 2)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]
    top = image[y0, x0] * (1.0 - fx) + image[y0, x0 + 1] * fx
    bottom = image[y0 + 1, x0] * (1.0 - fx) + image[y0 + 1, x0 + 1] * fx
    return (top * (1.0 - fy) + bottom * fy).astype(np.float32)


@dataclass(frozen=True)
class MatchResult:
    """Subsampled matches for one image pair, plus their RGB samples.

    View ids are not known here; they are stamped from the plan when the
    pair is exported.
    """

    ref_size: tuple[int, int]
    nbr_size: tuple[int, int]
    data: np.ndarray
    ref_colors: np.ndarray
    nbr_colors: np.ndarray

    def __len__(self) -> int:
        return len(self.data)


def _uniform_subset(indices: np.ndarray, cap: int) -> np.ndarray:
    if len(indices) <= cap:
        return indices
    take = np.linspace(0, len(indices) - 1, cap).round().astype(np.int64)
    return indices[np.unique(take)]


def match_pair(ref_image, nbr_image, max_records: int = DEFAULT_MAX_RECORDS,
               *, backend="auto",
               min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> MatchResult:
    """Match two image files and keep up to `max_records` records.

    `backend` is a registered name or any callable with the backend
    signature (see `backends`).
    """
    if max_records < 1:
        raise ValueError("max_records must be >= 1")
    if not 0.0 <= min_confidence <= 1.0:
        raise ValueError("min_confidence must be within [0, 1]")
    matcher = backend if callable(backend) else get_backend(backend)

    ref_rgb = load_image(ref_image)
    nbr_rgb = load_image(nbr_image)
    warp, confidence, valid = matcher(ref_rgb, nbr_rgb)

    warp = np.asarray(warp, dtype=np.float32)
    confidence = np.clip(np.asarray(confidence, dtype=np.float32), 0.0, 1.0)
    nbr_h, nbr_w = nbr_rgb.shape[:2]
    keep = (np.asarray(valid, dtype=bool)
            & np.all(np.isfinite(warp), axis=-1)
            & (warp[..., 0] >= 0.0) & (warp[..., 0] < nbr_w)
            & (warp[..., 1] >= 0.0) & (warp[..., 1] < nbr_h)
            & (confidence >= min_confidence))
    chosen = _uniform_subset(np.flatnonzero(keep.ravel()), max_records)

    ref_h, ref_w = ref_rgb.shape[:2]
    v_i, u_i = np.divmod(chosen, ref_w)
    pix_nbr = warp.reshape(-1, 2)[chosen]
    data = np.empty(len(chosen), dtype=edgc.RECORD_DTYPE)
    data["u_i"] = u_i
    data["v_i"] = v_i
    data["u_j"] = pix_nbr[:, 0]
    data["v_j"] = pix_nbr[:, 1]
    data["confidence"] = confidence.ravel()[chosen]
    return MatchResult(ref_size=(ref_w, ref_h), nbr_size=(nbr_w, nbr_h),
                       data=data,
                       ref_colors=ref_rgb[v_i, u_i],
                       nbr_colors=_bilinear(nbr_rgb, pix_nbr))


def _resolve_image(images_dir: Path, name: str) -> Path:
    path = images_dir / name
    if not path.is_file():
        raise ValueError(f"image {name!r} not found under {images_dir}")
    return path


def export_plan(plan: NeighborPlan, images_dir, out_dir, *,
                backend="auto", max_records: int = DEFAULT_MAX_RECORDS,
                min_confidence: float = DEFAULT_MIN_CONFIDENCE,
                write_color_sidecar: bool = True) -> list[Path]:
    """Match every planned pair and write corr_<ref>_<nbr>.edgc files.

    Returns the written correspondence paths, one per pair in plan order.
    """
    images_dir = Path(images_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []
    for ref_name, nbr_name in plan.pairs:
        ref_meta = plan.image(ref_name)
        nbr_meta = plan.image(nbr_name)
        result = match_pair(_resolve_image(images_dir, ref_name),
                            _resolve_image(images_dir, nbr_name),
                            max_records, backend=backend,
                            min_confidence=min_confidence)
        for meta, size in ((ref_meta, result.ref_size),
                           (nbr_meta, result.nbr_size)):
            if size != (meta.width, meta.height):
                raise ValueError(
                    f"{meta.name}: image is {size[0]}x{size[1]} but the "
                    f"plan says {meta.width}x{meta.height}")
        if len(result) == 0:
            logger.warning("pair %s -> %s produced no confident matches",
                           ref_name, nbr_name)

        corr_path = out_dir / edgc.corr_filename(ref_meta.view_id,
                                                 nbr_meta.view_id)
        edgc.write_corr(corr_path, ref_meta.view_id, nbr_meta.view_id,
                        result.ref_size, result.nbr_size, result.data)
        if write_color_sidecar:
            edgc.write_colors(
                out_dir / edgc.colors_filename(ref_meta.view_id,
                                               nbr_meta.view_id),
                result.ref_colors, result.nbr_colors)
        logger.info("%s -> %s: %d records", ref_name, nbr_name, len(result))
        written.append(corr_path)
    return written
