"""Camera model, COLMAP text ingestion, projection, and pose-proximity queries.

Conventions: OpenCV-style pinhole cameras. Rotation and translation are
world-to-camera (x_cam = R @ x_world + t), pixel origin at the top-left
corner, x rightward, y downward. Projection matrices are 3x4 acting on
column vectors: w * [u, v, 1]^T = P @ [x, y, z, 1]^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# COLMAP camera models accepted by the loader. Distorted models are refused:
# the pipeline assumes undistorted images.
_PINHOLE_MODELS = ("PINHOLE", "SIMPLE_PINHOLE")


def qvec_to_rotation(qvec: np.ndarray) -> np.ndarray:
    """Hamilton scalar-first quaternion (qw, qx, qy, qz) to 3x3 rotation."""
    w, x, y, z = np.asarray(qvec, dtype=float) / np.linalg.norm(qvec)
    return np.array([
        [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y],
        [2 * x * y + 2 * w * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * w * x],
        [2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, 1 - 2 * x * x - 2 * y * y],
    ])


def rotation_to_qvec(R: np.ndarray) -> np.ndarray:
    """3x3 rotation to Hamilton scalar-first quaternion with qw >= 0."""
    Rxx, Ryx, Rzx, Rxy, Ryy, Rzy, Rxz, Ryz, Rzz = np.asarray(R, dtype=float).flat
    K = np.array([
        [Rxx - Ryy - Rzz, 0, 0, 0],
        [Ryx + Rxy, Ryy - Rxx - Rzz, 0, 0],
        [Rzx + Rxz, Rzy + Ryz, Rzz - Rxx - Ryy, 0],
        [Ryz - Rzy, Rzx - Rxz, Rxy - Ryx, Rxx + Ryy + Rzz],
    ]) / 3.0
    eigvals, eigvecs = np.linalg.eigh(K)
    qvec = eigvecs[[3, 0, 1, 2], np.argmax(eigvals)]
    if qvec[0] < 0:
        qvec = -qvec
    return qvec


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class CameraView:
    """Pose and intrinsics of one registered image.

    `rotation` and `translation` map world points into the camera frame.
    """

    id: int
    image_name: str
    rotation: np.ndarray      # (3, 3) world-to-camera
    translation: np.ndarray   # (3,) world-to-camera, scene units
    focal_x: float
    focal_y: float
    principal_x: float
    principal_y: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "rotation", _freeze(self.rotation))
        object.__setattr__(self, "translation", _freeze(self.translation))
        R = self.rotation
        if R.shape != (3, 3) or self.translation.shape != (3,):
            raise ValueError(f"view {self.id}: rotation must be 3x3 and translation 3-vector")
        if np.max(np.abs(R.T @ R - np.eye(3))) > 1e-8:
            raise ValueError(f"view {self.id}: rotation is not orthonormal")
        if np.linalg.det(R) < 0:
            raise ValueError(f"view {self.id}: rotation has negative determinant")
        if not (self.focal_x > 0 and self.focal_y > 0):
            raise ValueError(f"view {self.id}: focal lengths must be positive")
        if not (0 <= self.principal_x <= self.width and 0 <= self.principal_y <= self.height):
            raise ValueError(f"view {self.id}: principal point outside image bounds")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"view {self.id}: image size must be positive")

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates, -R^T t."""
        return -self.rotation.T @ self.translation

    @property
    def extrinsics(self) -> np.ndarray:
        """World-to-camera [R | t] as a 3x4 matrix."""
        return np.hstack([self.rotation, self.translation[:, None]])

    @property
    def intrinsics(self) -> np.ndarray:
        """Upper-triangular calibration matrix K."""
        return np.array([
            [self.focal_x, 0.0, self.principal_x],
            [0.0, self.focal_y, self.principal_y],
            [0.0, 0.0, 1.0],
        ])


@dataclass(frozen=True)
class ProjectionMatrix:
    """3x4 matrix mapping homogeneous world points to homogeneous pixels."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _freeze(self.entries))
        if self.entries.shape != (3, 4):
            raise ValueError("projection matrix must be 3x4")
        if np.linalg.matrix_rank(self.entries[:, :3]) < 3:
            raise ValueError("projection matrix has rank-deficient 3x3 block")

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates (null direction of P)."""
        M = self.entries[:, :3]
        return -np.linalg.solve(M, self.entries[:, 3])


@dataclass(frozen=True)
class CameraSet:
    """Ordered, immutable collection of views with unique ids."""

    views: tuple[CameraView, ...]
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "views", tuple(self.views))
        if not self.views:
            raise ValueError("camera set must not be empty")
        by_id = {v.id: v for v in self.views}
        if len(by_id) != len(self.views):
            raise ValueError("duplicate view ids in camera set")
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.views)

    def __iter__(self):
        return iter(self.views)

    def view(self, view_id: int) -> CameraView:
        try:
            return self._by_id[view_id]
        except KeyError:
            raise KeyError(f"unknown view id {view_id}") from None


def projection_matrix(view: CameraView) -> ProjectionMatrix:
    """Assemble P = K [R | t] for a view."""
    return ProjectionMatrix(view.intrinsics @ view.extrinsics)


def project(P: ProjectionMatrix, point: np.ndarray) -> tuple[np.ndarray, float]:
    """Project a world point, returning (pixel, depth scale w).

    w is the third homogeneous coordinate; w > 0 iff the point lies in
    front of the camera. Points behind the camera are returned with
    negative w so the caller can decide whether to reject them.
    """
    point = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(point)):
        raise ValueError("point must be finite")
    h = P.entries @ np.append(point, 1.0)
    w = h[2]
    if abs(w) < 1e-12:
        raise ValueError("point at camera plane")
    return h[:2] / w, w


def project_many(P: ProjectionMatrix, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection of (N, 3) points to ((N, 2) pixels, (N,) scales).

    Rows with |w| < 1e-12 get non-finite pixels instead of raising; callers
    filter on the returned scale.
    """
    points = np.asarray(points, dtype=float)
    h = points @ P.entries[:, :3].T + P.entries[:, 3]
    w = h[:, 2]
    safe = np.where(np.abs(w) < 1e-12, np.nan, w)
    return h[:, :2] / safe[:, None], w


def camera_distance(a: CameraView, b: CameraView) -> float:
    """Frobenius norm of the difference of world-to-camera [R | t] matrices."""
    return float(np.linalg.norm(a.extrinsics - b.extrinsics))


def nearest_neighbors(reference: CameraView, cams: CameraSet, J: int) -> list[CameraView]:
    """The J views closest to `reference` in extrinsic Frobenius distance.

    The reference itself is excluded; ties are broken by ascending view id
    so the result is deterministic.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    others = [v for v in cams if v.id != reference.id]
    if not others:
        raise ValueError("no neighbors available")
    others.sort(key=lambda v: (camera_distance(reference, v), v.id))
    return others[:J]


def _parse_error(path: Path, line_no: int, reason: str) -> ValueError:
    return ValueError(f"{path.name}:{line_no}: {reason}")


def _read_cameras_txt(path: Path) -> dict[int, tuple[float, float, float, float, int, int]]:
    """Parse cameras.txt into camera_id -> (fx, fy, cx, cy, width, height)."""
    cameras = {}
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 4:
                raise _parse_error(path, line_no, "truncated camera line")
            try:
                cam_id = int(parts[0])
                model = parts[1]
                width, height = int(parts[2]), int(parts[3])
                params = [float(p) for p in parts[4:]]
            except ValueError:
                raise _parse_error(path, line_no, "malformed camera line") from None
            if model == "SIMPLE_PINHOLE":
                if len(params) != 3:
                    raise _parse_error(path, line_no, "SIMPLE_PINHOLE expects 3 params")
                f, cx, cy = params
                fx = fy = f
            elif model == "PINHOLE":
                if len(params) != 4:
                    raise _parse_error(path, line_no, "PINHOLE expects 4 params")
                fx, fy, cx, cy = params
            elif model in ("SIMPLE_RADIAL", "RADIAL", "OPENCV", "OPENCV_FISHEYE",
                           "FULL_OPENCV", "FOV", "SIMPLE_RADIAL_FISHEYE",
                           "RADIAL_FISHEYE", "THIN_PRISM_FISHEYE"):
                raise _parse_error(
                    path, line_no,
                    f"unsupported camera model {model}: undistort the images first "
                    "(only PINHOLE and SIMPLE_PINHOLE are accepted)")
            else:
                raise _parse_error(path, line_no, f"unknown camera model {model}")
            cameras[cam_id] = (fx, fy, cx, cy, width, height)
    return cameras


def load_colmap(directory_path) -> CameraSet:
    """Load a COLMAP text export (cameras.txt + images.txt) as a CameraSet.

    images.txt alternates pose lines with 2D-point lines; the latter are
    skipped. Views are ordered by ascending image id.
    """
    directory = Path(directory_path)
    cameras_path = directory / "cameras.txt"
    images_path = directory / "images.txt"
    for p in (cameras_path, images_path):
        if not p.is_file():
            raise FileNotFoundError(f"missing COLMAP file: {p}")

    cameras = _read_cameras_txt(cameras_path)

    views = []
    with open(images_path) as fh:
        expect_points_line = False
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line and not expect_points_line:
                continue
            if line.startswith("#"):
                continue
            if expect_points_line:
                # 2D observation line paired with the previous pose line.
                expect_points_line = False
                continue
            parts = line.split()
            if len(parts) < 10:
                raise _parse_error(images_path, line_no, "truncated image line")
            try:
                image_id = int(parts[0])
                qvec = np.array([float(p) for p in parts[1:5]])
                tvec = np.array([float(p) for p in parts[5:8]])
                cam_id = int(parts[8])
            except ValueError:
                raise _parse_error(images_path, line_no, "malformed image line") from None
            name = parts[9]
            if cam_id not in cameras:
                raise _parse_error(images_path, line_no, f"image references unknown camera {cam_id}")
            fx, fy, cx, cy, width, height = cameras[cam_id]
            views.append(CameraView(
                id=image_id, image_name=name,
                rotation=qvec_to_rotation(qvec), translation=tvec,
                focal_x=fx, focal_y=fy, principal_x=cx, principal_y=cy,
                width=width, height=height))
            expect_points_line = True

    if not views:
        raise ValueError("no registered images")
    views.sort(key=lambda v: v.id)
    return CameraSet(tuple(views))
