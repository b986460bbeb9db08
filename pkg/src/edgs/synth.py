"""Synthetic ground-truth scenes: known points, cameras, correspondences.

Everything a matcher would produce can be generated here with exact
geometry, so the whole pipeline is verifiable end to end at desk scale:
points carry procedural colors (hash of index, no texture assets), cameras
sit on simple layouts looking at the scene, and correspondence records are
exact projections with optional Gaussian pixel noise injected only in the
neighbor image, mirroring the warp-field asymmetry of real matchers.

Occlusion is deliberately ignored (point cloud, not a mesh); visibility is
frustum plus cheirality only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import CameraSet, CameraView, nearest_neighbors, project_many, \
    projection_matrix, rotation_to_qvec
from .correspondence import CorrespondenceSet, colors_filename, corr_filename, \
    write_colors, write_corr

logger = logging.getLogger(__name__)

IMAGE_WIDTH = 1024
IMAGE_HEIGHT = 768
FOCAL = 1000.0

# Keep synthetic pixels this far from the image border so that float32
# storage in correspondence records cannot round them out of bounds.
BORDER_MARGIN = 0.5

_LAYOUTS = ("ring", "arc", "grid")


@dataclass(frozen=True)
class SceneOracle:
    """Ground-truth colored points plus the cameras that observe them."""

    positions: np.ndarray
    colors: np.ndarray
    cameras: CameraSet
    seed: int

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def points(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.positions, self.colors))


def point_colors(n: int) -> np.ndarray:
    """Procedural colors: splitmix64 hash of the point index, (n, 3) in [0, 1)."""
    mul1 = np.uint64(0xBF58476D1CE4E5B9)
    mul2 = np.uint64(0x94D049BB133111EB)
    out = np.empty((n, 3))
    base = np.arange(n, dtype=np.uint64) * np.uint64(3)
    for c in range(3):
        z = (base + np.uint64(c + 1)) * np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * mul1
        z = (z ^ (z >> np.uint64(27))) * mul2
        z = z ^ (z >> np.uint64(31))
        out[:, c] = z / 2.0**64
    return out


def _look_at(center: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """World-to-camera rotation and translation for a camera at `center`
    with its optical axis through `target` (x right, y down, z forward)."""
    forward = target - center
    forward = forward / np.linalg.norm(forward)
    up = np.array([0.0, 0.0, 1.0])
    if abs(forward @ up) > 0.999:
        up = np.array([0.0, 1.0, 0.0])
    right = np.cross(forward, up)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    return R, -R @ center


def _camera_centers(n_cameras: int, layout: str) -> np.ndarray:
    if layout == "ring":
        theta = 2.0 * np.pi * np.arange(n_cameras) / n_cameras
        return np.stack([5.0 * np.cos(theta), 5.0 * np.sin(theta),
                         np.full(n_cameras, 1.7)], axis=1)
    if layout == "arc":
        theta = np.linspace(-np.pi / 2.6, np.pi / 2.6, n_cameras)
        return np.stack([5.0 * np.cos(theta), 5.0 * np.sin(theta),
                         np.full(n_cameras, 1.7)], axis=1)
    if layout == "grid":
        side = int(np.ceil(np.sqrt(n_cameras)))
        lin = np.linspace(-1.4, 1.4, side) if side > 1 else np.zeros(1)
        gx, gy = np.meshgrid(lin, lin, indexing="ij")
        centers = np.stack([gx.ravel(), gy.ravel(),
                            np.full(side * side, 5.0)], axis=1)
        return centers[:n_cameras]
    raise ValueError(f"unknown layout {layout!r}, expected one of {_LAYOUTS}")


def _build_cameras(n_cameras: int, layout: str) -> CameraSet:
    target = np.zeros(3)
    views = []
    for k, center in enumerate(_camera_centers(n_cameras, layout)):
        R, t = _look_at(center, target)
        views.append(CameraView(
            id=k + 1, image_name=f"view_{k + 1:03d}.png",
            rotation=R, translation=t,
            focal_x=FOCAL, focal_y=FOCAL,
            principal_x=IMAGE_WIDTH / 2.0, principal_y=IMAGE_HEIGHT / 2.0,
            width=IMAGE_WIDTH, height=IMAGE_HEIGHT))
    return CameraSet(tuple(views))


def visibility_mask(positions: np.ndarray, view: CameraView) -> np.ndarray:
    """True where a point projects inside the frame (with the float32-safe
    border margin) and in front of the camera."""
    pixels, w = project_many(projection_matrix(view), positions)
    with np.errstate(invalid="ignore"):
        inside = ((pixels[:, 0] >= BORDER_MARGIN)
                  & (pixels[:, 0] <= view.width - BORDER_MARGIN)
                  & (pixels[:, 1] >= BORDER_MARGIN)
                  & (pixels[:, 1] <= view.height - BORDER_MARGIN))
        return inside & (w > 0)


def _sample_patch(rng: np.random.Generator, n: int) -> np.ndarray:
    """Points on a gently waved surface patch around the origin."""
    xy = rng.uniform(-1.0, 1.0, size=(n, 2))
    z = 0.2 * np.sin(2.1 * xy[:, 0]) * np.cos(1.9 * xy[:, 1])
    z = z + 0.02 * rng.standard_normal(n)
    return np.column_stack([xy, z])


def make_scene(n_points: int, n_cameras: int, layout: str = "ring",
               seed: int = 0) -> SceneOracle:
    """Build a deterministic oracle scene.

    Every point is guaranteed visible from at least two cameras; points
    failing the check are resampled a bounded number of times.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if n_cameras < 2:
        raise ValueError("at least two cameras are required")
    cams = _build_cameras(n_cameras, layout)
    rng = np.random.default_rng(seed)
    positions = _sample_patch(rng, n_points)
    for _ in range(50):
        cover = np.zeros(n_points, dtype=np.int64)
        for view in cams:
            cover += visibility_mask(positions, view)
        bad = cover < 2
        if not np.any(bad):
            return SceneOracle(positions, point_colors(n_points), cams, seed)
        positions[bad] = _sample_patch(rng, int(bad.sum()))
    raise ValueError(f"{layout} layout cannot satisfy two-camera visibility "
                     "after 50 resampling rounds")


def render_correspondences(scene: SceneOracle, ref_id: int, nbr_id: int,
                           pixel_noise_sigma: float = 0.0,
                           confidence_model: str = "constant_one",
                           return_indices: bool = False):
    """Emulate a dense matcher on one view pair.

    One record per co-visible point: the reference pixel is the exact
    projection, the neighbor pixel gets independent Gaussian noise of
    `pixel_noise_sigma` (records pushed outside the frame are dropped).
    Confidence is 1.0 under "constant_one" or exp(-|noise|) under
    "distance_decay". With return_indices=True the ground-truth point index
    of each surviving record is returned alongside the set.
    """
    if confidence_model not in ("constant_one", "distance_decay"):
        raise ValueError(f"unknown confidence model {confidence_model!r}")
    if pixel_noise_sigma < 0.0:
        raise ValueError("pixel_noise_sigma must be >= 0")
    ref = scene.cameras.view(ref_id)
    nbr = scene.cameras.view(nbr_id)
    covisible = visibility_mask(scene.positions, ref) & visibility_mask(scene.positions, nbr)
    indices = np.flatnonzero(covisible)
    if len(indices) == 0:
        raise ValueError(f"no co-visible points between views {ref_id} and {nbr_id}")

    pix_ref, _ = project_many(projection_matrix(ref), scene.positions[indices])
    pix_nbr, _ = project_many(projection_matrix(nbr), scene.positions[indices])
    rng = np.random.default_rng([scene.seed, ref_id, nbr_id])
    offsets = pixel_noise_sigma * rng.standard_normal(pix_nbr.shape)
    pix_nbr = pix_nbr + offsets
    keep = ((pix_nbr[:, 0] >= BORDER_MARGIN)
            & (pix_nbr[:, 0] <= nbr.width - BORDER_MARGIN)
            & (pix_nbr[:, 1] >= BORDER_MARGIN)
            & (pix_nbr[:, 1] <= nbr.height - BORDER_MARGIN))
    indices, pix_ref, pix_nbr = indices[keep], pix_ref[keep], pix_nbr[keep]
    if confidence_model == "constant_one":
        confidence = np.ones(len(indices))
    else:
        confidence = np.exp(-np.linalg.norm(offsets[keep], axis=1))
    cset = CorrespondenceSet.from_arrays(
        ref_id, nbr_id, (ref.width, ref.height), (nbr.width, nbr.height),
        pix_ref, pix_nbr, confidence)
    if return_indices:
        return cset, indices
    return cset


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_colmap_model(cams: CameraSet, directory: Path) -> None:
    """Write cameras.txt / images.txt / points3D.txt in COLMAP text form."""
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "cameras.txt", "w") as fh:
        fh.write("# Camera list with one line of data per camera:\n")
        fh.write("#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n")
        for v in cams:
            params = " ".join(_fmt(p) for p in
                              (v.focal_x, v.focal_y, v.principal_x, v.principal_y))
            fh.write(f"{v.id} PINHOLE {v.width} {v.height} {params}\n")
    with open(directory / "images.txt", "w") as fh:
        fh.write("# Image list with two lines of data per image:\n")
        fh.write("#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n")
        fh.write("#   POINTS2D[] as (X, Y, POINT3D_ID)\n")
        for v in cams:
            q = rotation_to_qvec(v.rotation)
            pose = " ".join(_fmt(x) for x in (*q, *v.translation))
            fh.write(f"{v.id} {pose} {v.id} {v.image_name}\n\n")
    with open(directory / "points3D.txt", "w") as fh:
        fh.write("# 3D point list with one line of data per point:\n")


def export_scene(scene: SceneOracle, directory, num_neighbors: int = 2,
                 pixel_noise_sigma: float = 0.0,
                 confidence_model: str = "constant_one") -> list[tuple[int, int]]:
    """Write the scene as a COLMAP model plus EDGC files and color sidecars.

    Every camera acts as a reference view paired with its `num_neighbors`
    nearest neighbors, so the directory is directly consumable by the full
    pipeline. Returns the (ref, nbr) pairs written.
    """
    directory = Path(directory)
    write_colmap_model(scene.cameras, directory / "sparse")
    corr_dir = directory / "corr"
    corr_dir.mkdir(parents=True, exist_ok=True)
    pairs = []
    for ref in scene.cameras:
        for nbr in nearest_neighbors(ref, scene.cameras, num_neighbors):
            cset, indices = render_correspondences(
                scene, ref.id, nbr.id, pixel_noise_sigma, confidence_model,
                return_indices=True)
            write_corr(cset, corr_dir / corr_filename(ref.id, nbr.id))
            colors = scene.colors[indices]
            write_colors(colors, colors, corr_dir / colors_filename(ref.id, nbr.id))
            pairs.append((ref.id, nbr.id))
    logger.info("exported %d correspondence pairs to %s", len(pairs), corr_dir)
    return pairs
