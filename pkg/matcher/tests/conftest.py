"""Shared fixtures: textured renders of a known scene.

Images are rendered by splatting a colored point cloud through real
camera models from the splat-initialization package, so the true
pixel-to-pixel warp between any two renders is available through the
cameras and tests can triangulate adapter output against ground truth.
"""

from __future__ import annotations

import json
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import ndimage

from edgs.camera import CameraSet, CameraView, project_many, projection_matrix
from edgs.synth import point_colors, write_colmap_model

# Let the primary suite run from the repository root even when this
# package is not installed: drop these tests instead of failing imports.
try:
    import edgs_matcher  # noqa: F401
except ImportError:
    collect_ignore_glob = ["test_matcher_*.py"]

WIDTH = 1024
HEIGHT = 768
FOCAL = 1000.0
N_POINTS = 60_000


def _look_at_origin(center: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    forward = -center / np.linalg.norm(center)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    return R, -R @ center


def make_camera(view_id: int, name: str, center) -> CameraView:
    center = np.asarray(center, dtype=float)
    R, t = _look_at_origin(center)
    return CameraView(id=view_id, image_name=name, rotation=R, translation=t,
                      focal_x=FOCAL, focal_y=FOCAL,
                      principal_x=WIDTH / 2.0, principal_y=HEIGHT / 2.0,
                      width=WIDTH, height=HEIGHT)


def surface_points(rng: np.random.Generator, n: int) -> np.ndarray:
    xy = rng.uniform(-1.0, 1.0, size=(n, 2))
    z = 0.2 * np.sin(2.1 * xy[:, 0]) * np.cos(1.9 * xy[:, 1])
    return np.column_stack([xy, z])


def render_view(positions: np.ndarray, colors: np.ndarray,
                view: CameraView) -> np.ndarray:
    """Painter's splat of the cloud: far points first so near ones win."""
    pixels, w = project_many(projection_matrix(view), positions)
    order = np.argsort(-w)
    pixels, w, colors = pixels[order], w[order], colors[order]
    u = np.rint(pixels[:, 0]).astype(np.int64)
    v = np.rint(pixels[:, 1]).astype(np.int64)
    inside = (w > 0) & (u >= 1) & (u < WIDTH - 1) & (v >= 1) & (v < HEIGHT - 1)
    u, v, colors = u[inside], v[inside], colors[inside]

    image = np.full((HEIGHT, WIDTH, 3), 0.5, dtype=np.float32)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            image[v + dy, u + dx] = colors
    image = ndimage.gaussian_filter(image, sigma=(0.7, 0.7, 0.0))
    return np.clip(image, 0.0, 1.0)


def save_png(image: np.ndarray, path) -> None:
    from PIL import Image

    Image.fromarray(np.rint(image * 255.0).astype(np.uint8)).save(path)


def plan_dict(cams, pairs: list[list[str]]) -> dict:
    return {"pairs": pairs,
            "images": [{"view_id": v.id, "name": v.image_name,
                        "width": v.width, "height": v.height} for v in cams]}


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """Three narrow-baseline renders, a pairing plan, and a COLMAP model."""
    rng = np.random.default_rng(42)
    positions = surface_points(rng, N_POINTS)
    colors = point_colors(N_POINTS)
    cams = CameraSet((
        make_camera(1, "view_a.png", (0.0, -5.2, 1.7)),
        make_camera(2, "view_b.png", (0.55, -5.2, 1.7)),
        make_camera(3, "view_c.png", (-0.55, -5.2, 1.7)),
    ))

    root = tmp_path_factory.mktemp("matcher_scene")
    images = root / "images"
    images.mkdir()
    for view in cams:
        save_png(render_view(positions, colors, view),
                 images / view.image_name)

    plan_path = root / "plan.json"
    plan_path.write_text(json.dumps(plan_dict(
        cams, [["view_a.png", "view_b.png"],
               ["view_b.png", "view_c.png"],
               ["view_c.png", "view_a.png"]]), indent=2) + "\n")

    two_view_path = root / "plan_two_view.json"
    two_view_path.write_text(json.dumps(plan_dict(
        cams, [["view_a.png", "view_b.png"],
               ["view_b.png", "view_a.png"]]), indent=2) + "\n")

    sparse = root / "sparse"
    sparse.mkdir()
    write_colmap_model(cams, sparse)
    return SimpleNamespace(root=root, images=images, plan_path=plan_path,
                           two_view_path=two_view_path, sparse=sparse,
                           cams=cams, positions=positions)
