"""Gaussian splat assembly: scale, rotation, opacity, noise, PLY export.

Exported files use the de-facto splat-trainer PLY layout: 62 little-endian
float32 properties per vertex (position, zero normals, DC and higher-order
SH coefficients, opacity logit, log-scales, scalar-first quaternion), so
the output drops straight into standard viewers and training code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .camera import CameraView, qvec_to_rotation
from .sh import C0, NUM_COEFFS, ShCoefficients

DEFAULT_OPACITY = 0.1
IDENTITY_QUAT = (1.0, 0.0, 0.0, 0.0)

PLY_PROPERTIES = (
    ["x", "y", "z", "nx", "ny", "nz"]
    + [f"f_dc_{i}" for i in range(3)]
    + [f"f_rest_{i}" for i in range(45)]
    + ["opacity"]
    + [f"scale_{i}" for i in range(3)]
    + [f"rot_{i}" for i in range(4)]
)


def inverse_sigmoid(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("opacity must lie strictly in (0, 1)")
    return float(np.log(p / (1.0 - p)))


def _freeze(a, dtype=np.float64) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SplatInit:
    """Full parameter set of one initialized Gaussian splat.

    scale_log holds per-axis log-scales; rotation is a unit quaternion in
    scalar-first (w, x, y, z) order.
    """

    position: np.ndarray
    sh: ShCoefficients
    opacity_logit: float
    scale_log: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        position = _freeze(self.position)
        scale_log = _freeze(self.scale_log)
        rotation = _freeze(self.rotation)
        if position.shape != (3,) or not np.all(np.isfinite(position)):
            raise ValueError("position must be a finite 3-vector")
        if scale_log.shape != (3,) or not np.all(np.isfinite(scale_log)):
            raise ValueError("scale_log must be a finite 3-vector")
        if rotation.shape != (4,):
            raise ValueError("rotation must be a quaternion (w, x, y, z)")
        if abs(np.linalg.norm(rotation) - 1.0) > 1e-6:
            raise ValueError("rotation quaternion must have unit norm")
        if not np.isfinite(self.opacity_logit):
            raise ValueError("opacity_logit must be finite")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "scale_log", scale_log)
        object.__setattr__(self, "rotation", rotation)


def init_scale(position, ref_cam: CameraView, k_scale: float) -> np.ndarray:
    """Isotropic log-scale from distance to the reference camera.

    s = k_scale * distance / mean_focal, i.e. roughly a one-pixel footprint
    in the reference view at k_scale = 1.
    """
    position = np.asarray(position, dtype=np.float64)
    depth = (ref_cam.rotation @ position + ref_cam.translation)[2]
    if depth <= 0.0:
        raise ValueError("position behind reference camera")
    distance = np.linalg.norm(position - ref_cam.center)
    mean_focal = 0.5 * (ref_cam.focal_x + ref_cam.focal_y)
    s = np.log(k_scale * distance / mean_focal)
    return np.array([s, s, s])


def covariance_from(scale_log, rotation) -> np.ndarray:
    """Sigma = R S S^T R^T; symmetric positive semi-definite by build."""
    R = qvec_to_rotation(rotation)
    variances = np.exp(2.0 * np.asarray(scale_log, dtype=np.float64))
    return (R * variances) @ R.T


def _noise(seed: int, stream: int, count: int) -> np.ndarray:
    # One substream per perturbed quantity, rows indexed by splat, so the
    # noise applied to splat k is independent of list length and order.
    return np.random.default_rng([seed, stream]).standard_normal((count, 3))


def perturb_arrays(positions: np.ndarray, sh_coeffs: np.ndarray,
                   sigma_xyz: float, sigma_rgb: float,
                   seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Array form of perturb(): (N, 3) positions, (N, 16, 3) coefficients.

    Color noise is applied to the DC-rendered color in [0, 1] space,
    clamped, and mapped back to a DC row; higher-order rows are untouched.
    """
    if sigma_xyz < 0.0 or sigma_rgb < 0.0:
        raise ValueError("noise sigmas must be >= 0")
    n = len(positions)
    if sigma_xyz > 0.0:
        positions = positions + sigma_xyz * _noise(seed, 0, n)
    if sigma_rgb > 0.0:
        color = 0.5 + C0 * sh_coeffs[:, 0, :]
        color = np.clip(color + sigma_rgb * _noise(seed, 1, n), 0.0, 1.0)
        sh_coeffs = sh_coeffs.copy()
        sh_coeffs[:, 0, :] = (color - 0.5) / C0
    return positions, sh_coeffs


def perturb(splats: Sequence[SplatInit], sigma_xyz: float, sigma_rgb: float,
            seed: int) -> list[SplatInit]:
    """Add seeded Gaussian noise to positions and DC colors."""
    if sigma_xyz == 0.0 and sigma_rgb == 0.0:
        if sigma_xyz < 0.0 or sigma_rgb < 0.0:
            raise ValueError("noise sigmas must be >= 0")
        return list(splats)
    positions = np.array([s.position for s in splats])
    coeffs = np.array([s.sh.coeffs for s in splats])
    positions, coeffs = perturb_arrays(positions, coeffs, sigma_xyz, sigma_rgb, seed)
    return [SplatInit(p, ShCoefficients(c), s.opacity_logit, s.scale_log, s.rotation)
            for p, c, s in zip(positions, coeffs, splats)]


def _header(count: int) -> bytes:
    lines = ["ply", "format binary_little_endian 1.0", f"element vertex {count}"]
    lines += [f"property float {name}" for name in PLY_PROPERTIES]
    lines.append("end_header")
    return ("\n".join(lines) + "\n").encode("ascii")


def write_ply_arrays(positions: np.ndarray, sh_coeffs: np.ndarray,
                     opacity_logit: np.ndarray, scale_log: np.ndarray,
                     rotation: np.ndarray, path) -> None:
    """Write splat arrays as binary PLY; see write_ply for the layout."""
    count = len(positions)
    if count == 0:
        raise ValueError("cannot write an empty splat set")
    block = np.empty((count, len(PLY_PROPERTIES)), dtype="<f4")
    block[:, 0:3] = positions
    block[:, 3:6] = 0.0  # nx ny nz, unused by trainers but part of the layout
    block[:, 6:9] = sh_coeffs[:, 0, :]
    # channel-major: all 15 higher-order R coefficients, then G, then B
    block[:, 9:54] = sh_coeffs[:, 1:, :].transpose(0, 2, 1).reshape(count, 45)
    block[:, 54] = opacity_logit
    block[:, 55:58] = scale_log
    block[:, 58:62] = rotation
    with open(path, "wb") as fh:
        fh.write(_header(count))
        fh.write(block.tobytes())


def write_ply(splats: Sequence[SplatInit], path) -> None:
    """Write splats as a binary little-endian PLY (62 float32 properties)."""
    if len(splats) == 0:
        raise ValueError("cannot write an empty splat set")
    write_ply_arrays(
        np.array([s.position for s in splats]),
        np.array([s.sh.coeffs for s in splats]),
        np.array([s.opacity_logit for s in splats]),
        np.array([s.scale_log for s in splats]),
        np.array([s.rotation for s in splats]),
        path,
    )
