"""Synthetic oracle scene tests: geometry, rendering, export round trips."""

import numpy as np
import pytest

from edgs.camera import (
    CameraSet,
    CameraView,
    load_colmap,
    projection_matrix,
    rotation_to_qvec,
)
from edgs.correspondence import (
    colors_filename,
    corr_filename,
    read_colors,
    read_corr,
)
from edgs.synth import (
    BORDER_MARGIN,
    FOCAL,
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    SceneOracle,
    export_scene,
    make_scene,
    point_colors,
    render_correspondences,
    visibility_mask,
)
from edgs.triangulate import triangulate_set


def look_away_camera(view_id):
    """Camera on the ring turned 180 degrees away from the origin."""
    center = np.array([5.0, 0.0, 1.7])
    forward = np.array([1.0, 0.0, 0.0])  # away from the patch at the origin
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward])
    return CameraView(view_id, f"away_{view_id}.png", R, -R @ center,
                      FOCAL, FOCAL, IMAGE_WIDTH / 2.0, IMAGE_HEIGHT / 2.0,
                      IMAGE_WIDTH, IMAGE_HEIGHT)


class TestPointColors:
    def test_deterministic_and_prefix_stable(self):
        assert np.array_equal(point_colors(10), point_colors(10))
        assert np.array_equal(point_colors(10), point_colors(100)[:10])

    def test_range_and_spread(self):
        c = point_colors(10_000)
        assert c.shape == (10_000, 3)
        assert np.all((c >= 0.0) & (c < 1.0))
        assert abs(c.mean() - 0.5) < 0.01
        # hash colors must not collide in any realistic scene
        assert len(np.unique(c.view("V24"))) == 10_000


class TestMakeScene:
    def test_deterministic(self):
        a = make_scene(100, 6, "ring", seed=5)
        b = make_scene(100, 6, "ring", seed=5)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.colors, b.colors)
        for va, vb in zip(a.cameras, b.cameras):
            assert np.array_equal(va.rotation, vb.rotation)
            assert np.array_equal(va.translation, vb.translation)

    def test_seed_changes_points(self):
        a = make_scene(100, 6, seed=1)
        b = make_scene(100, 6, seed=2)
        assert not np.array_equal(a.positions, b.positions)

    def test_validations(self):
        with pytest.raises(ValueError, match="n_points"):
            make_scene(0, 6)
        with pytest.raises(ValueError, match="two cameras"):
            make_scene(10, 1)
        with pytest.raises(ValueError, match="unknown layout"):
            make_scene(10, 6, "spiral")

    @pytest.mark.parametrize("layout,n_cameras", [
        ("ring", 8), ("ring", 2), ("arc", 5), ("grid", 9), ("grid", 2),
    ])
    def test_layouts_build_and_cover(self, layout, n_cameras):
        scene = make_scene(200, n_cameras, layout, seed=3)
        views = list(scene.cameras)
        assert len(views) == n_cameras
        assert [v.id for v in views] == list(range(1, n_cameras + 1))
        assert views[0].image_name == "view_001.png"
        cover = np.zeros(len(scene), dtype=int)
        for v in views:
            cover += visibility_mask(scene.positions, v)
        assert np.all(cover >= 2)

    def test_ring_geometry(self):
        scene = make_scene(10, 8, "ring", seed=0)
        for v in scene.cameras:
            assert np.hypot(v.center[0], v.center[1]) == pytest.approx(5.0)
            assert v.center[2] == pytest.approx(1.7)
            # optical axis passes through the scene origin
            forward = -v.center / np.linalg.norm(v.center)
            assert np.allclose(v.rotation[2], forward, atol=1e-12)

    def test_points_stay_on_patch(self):
        scene = make_scene(4096, 8, "ring", seed=9)
        assert np.all(np.abs(scene.positions[:, :2]) <= 1.0)
        assert np.all(np.abs(scene.positions[:, 2]) < 0.35)

    def test_points_property(self):
        scene = make_scene(5, 4, seed=1)
        pts = scene.points
        assert len(pts) == 5
        assert np.array_equal(pts[2][0], scene.positions[2])
        assert np.array_equal(pts[2][1], scene.colors[2])


class TestVisibility:
    def test_matches_manual_projection(self):
        scene = make_scene(300, 6, "ring", seed=4)
        for view in scene.cameras:
            P = projection_matrix(view).entries
            hom = scene.positions @ P[:, :3].T + P[:, 3]
            expected = np.zeros(len(scene), dtype=bool)
            front = hom[:, 2] > 0
            px = np.full((len(scene), 2), np.nan)
            px[front] = hom[front, :2] / hom[front, 2:]
            with np.errstate(invalid="ignore"):
                expected = (front
                            & (px[:, 0] >= BORDER_MARGIN)
                            & (px[:, 0] <= view.width - BORDER_MARGIN)
                            & (px[:, 1] >= BORDER_MARGIN)
                            & (px[:, 1] <= view.height - BORDER_MARGIN))
            assert np.array_equal(visibility_mask(scene.positions, view), expected)

    def test_behind_camera_invisible(self):
        cam = look_away_camera(1)
        # everything on the patch side is behind this camera
        assert not visibility_mask(np.array([[0.0, 0.0, 0.0],
                                             [1.0, 0.2, 0.1]]), cam).any()

    def test_border_margin(self):
        cam = CameraView(1, "c.png", np.eye(3), np.zeros(3), FOCAL, FOCAL,
                         IMAGE_WIDTH / 2.0, IMAGE_HEIGHT / 2.0,
                         IMAGE_WIDTH, IMAGE_HEIGHT)
        z = 2.0
        def point_at(u, v):
            return [(u - cam.principal_x) * z / FOCAL,
                    (v - cam.principal_y) * z / FOCAL, z]
        pts = np.array([point_at(0.49, 400.0), point_at(0.51, 400.0),
                        point_at(500.0, IMAGE_HEIGHT - 0.49),
                        point_at(500.0, IMAGE_HEIGHT - 0.51)])
        assert visibility_mask(pts, cam).tolist() == [False, True, False, True]


class TestRenderCorrespondences:
    def test_deterministic(self):
        scene = make_scene(300, 8, seed=7)
        a = render_correspondences(scene, 1, 2, pixel_noise_sigma=1.5,
                                   confidence_model="distance_decay")
        b = render_correspondences(scene, 1, 2, pixel_noise_sigma=1.5,
                                   confidence_model="distance_decay")
        assert a.data.tobytes() == b.data.tobytes()

    def test_noise_free_matches_projection(self):
        scene = make_scene(300, 8, seed=7)
        cset, indices = render_correspondences(scene, 1, 2, return_indices=True)
        assert len(cset) == len(indices)
        ref = scene.cameras.view(1)
        nbr = scene.cameras.view(2)
        covis = (visibility_mask(scene.positions, ref)
                 & visibility_mask(scene.positions, nbr))
        assert np.array_equal(indices, np.flatnonzero(covis))
        for view, ukey, vkey in ((ref, "u_i", "v_i"), (nbr, "u_j", "v_j")):
            P = projection_matrix(view).entries
            hom = scene.positions[indices] @ P[:, :3].T + P[:, 3]
            exact = hom[:, :2] / hom[:, 2:]
            stored = np.stack([cset.data[ukey], cset.data[vkey]], axis=1)
            assert np.array_equal(stored, exact.astype(np.float32))
        assert np.all(cset.data["confidence"] == 1.0)

    def test_noise_hits_neighbor_only(self):
        scene = make_scene(300, 8, seed=7)
        clean, idx_clean = render_correspondences(scene, 1, 2, return_indices=True)
        noisy, idx_noisy = render_correspondences(scene, 1, 2,
                                                  pixel_noise_sigma=1.0,
                                                  return_indices=True)
        # compare on the records both renders kept
        common, a, b = np.intersect1d(idx_clean, idx_noisy, return_indices=True)
        assert len(common) > 200
        assert np.array_equal(clean.data["u_i"][a], noisy.data["u_i"][b])
        assert np.array_equal(clean.data["v_i"][a], noisy.data["v_i"][b])
        assert not np.array_equal(clean.data["u_j"][a], noisy.data["u_j"][b])

    def test_distance_decay_confidence(self):
        scene = make_scene(300, 8, seed=7)
        clean, idx_clean = render_correspondences(scene, 1, 2, return_indices=True)
        noisy, idx_noisy = render_correspondences(
            scene, 1, 2, pixel_noise_sigma=2.0,
            confidence_model="distance_decay", return_indices=True)
        common, a, b = np.intersect1d(idx_clean, idx_noisy, return_indices=True)
        offsets = np.stack(
            [noisy.data["u_j"][b].astype(np.float64) - clean.data["u_j"][a],
             noisy.data["v_j"][b].astype(np.float64) - clean.data["v_j"][a]],
            axis=1)
        expected = np.exp(-np.linalg.norm(offsets, axis=1))
        assert np.allclose(noisy.data["confidence"][b], expected, atol=1e-4)
        assert np.all((noisy.data["confidence"] > 0.0)
                      & (noisy.data["confidence"] <= 1.0))

    def test_decay_is_one_without_noise(self):
        scene = make_scene(100, 6, seed=2)
        cset = render_correspondences(scene, 1, 2,
                                      confidence_model="distance_decay")
        assert np.all(cset.data["confidence"] == 1.0)

    def test_validations(self):
        scene = make_scene(50, 4, seed=1)
        with pytest.raises(ValueError, match="confidence model"):
            render_correspondences(scene, 1, 2, confidence_model="flat")
        with pytest.raises(ValueError, match="pixel_noise_sigma"):
            render_correspondences(scene, 1, 2, pixel_noise_sigma=-1.0)

    def test_no_covisible_points_raises(self):
        base = make_scene(50, 4, seed=1)
        cams = CameraSet((base.cameras.view(1), look_away_camera(9)))
        scene = SceneOracle(base.positions, base.colors, cams, seed=1)
        with pytest.raises(ValueError,
                           match="no co-visible points between views 1 and 9"):
            render_correspondences(scene, 1, 9)

    def test_big_noise_drops_border_records(self):
        scene = make_scene(500, 8, seed=6)
        clean = render_correspondences(scene, 1, 2)
        noisy = render_correspondences(scene, 1, 2, pixel_noise_sigma=200.0)
        assert len(noisy) < len(clean)
        assert np.all((noisy.data["u_j"] >= BORDER_MARGIN)
                      & (noisy.data["u_j"] <= IMAGE_WIDTH - BORDER_MARGIN))

    def test_noise_propagates_monotonically(self):
        # same seed means identical normal draws scaled by sigma, so the
        # triangulation error must grow pointwise with sigma
        scene = make_scene(400, 8, seed=11)
        errors = {}
        for sigma in (0.5, 2.0):
            cset, indices = render_correspondences(
                scene, 1, 2, pixel_noise_sigma=sigma, return_indices=True)
            cands = triangulate_set(cset, scene.cameras)
            err = np.linalg.norm(cands.positions - scene.positions[indices],
                                 axis=1)
            errors[sigma] = (indices, err)
        common, a, b = np.intersect1d(errors[0.5][0], errors[2.0][0],
                                      return_indices=True)
        assert len(common) > 300
        low, high = errors[0.5][1][a], errors[2.0][1][b]
        assert np.median(high) > 3.0 * np.median(low)
        assert np.mean(high >= low) > 0.95

    def test_noise_free_triangulates_back(self):
        scene = make_scene(400, 8, seed=12)
        cset, indices = render_correspondences(scene, 1, 2, return_indices=True)
        cands = triangulate_set(cset, scene.cameras)
        err = np.linalg.norm(cands.positions - scene.positions[indices], axis=1)
        assert err.max() < 1e-5
        assert cands.max_eps.max() < 1e-7
        assert not cands.behind.any()


class TestExport:
    def test_colmap_round_trip(self, tmp_path):
        scene = make_scene(80, 6, "ring", seed=8)
        export_scene(scene, tmp_path, num_neighbors=2)
        loaded = load_colmap(tmp_path / "sparse")
        assert [v.id for v in loaded] == [v.id for v in scene.cameras]
        for got, want in zip(loaded, scene.cameras):
            assert got.image_name == want.image_name
            assert (got.width, got.height) == (want.width, want.height)
            assert got.focal_x == want.focal_x
            assert got.principal_y == want.principal_y
            assert np.allclose(got.rotation, want.rotation, atol=1e-12)
            assert np.allclose(got.translation, want.translation, atol=1e-12)

    def test_images_txt_shape(self, tmp_path):
        scene = make_scene(20, 4, seed=3)
        export_scene(scene, tmp_path, num_neighbors=1)
        lines = (tmp_path / "sparse" / "images.txt").read_text().splitlines()
        data = [ln for ln in lines if ln and not ln.startswith("#")]
        assert len(data) == 4  # one pose line per image, blank points lines
        for ln in data:
            parts = ln.split()
            assert len(parts) == 10
            q = np.array([float(x) for x in parts[1:5]])
            assert np.linalg.norm(q) == pytest.approx(1.0, abs=1e-12)

    def test_corr_files_round_trip(self, tmp_path):
        scene = make_scene(120, 5, seed=13)
        pairs = export_scene(scene, tmp_path, num_neighbors=2)
        assert len(pairs) == 10
        assert len(set(pairs)) == 10
        corr_dir = tmp_path / "corr"
        for ref_id, nbr_id in pairs:
            cset = read_corr(corr_dir / corr_filename(ref_id, nbr_id))
            assert cset.ref_view_id == ref_id
            assert cset.nbr_view_id == nbr_id
            assert (cset.ref_width, cset.ref_height) == (IMAGE_WIDTH, IMAGE_HEIGHT)
            assert len(cset) > 0
            expect, indices = render_correspondences(scene, ref_id, nbr_id,
                                                     return_indices=True)
            assert cset.data.tobytes() == expect.data.tobytes()
            colors = read_colors(corr_dir / colors_filename(ref_id, nbr_id),
                                 len(cset))
            assert colors.shape == (len(cset), 2, 3)
            assert np.array_equal(colors[:, 0, :],
                                  scene.colors[indices].astype(np.float32))
            assert np.array_equal(colors[:, 0, :], colors[:, 1, :])

    def test_export_with_noise_and_decay(self, tmp_path):
        scene = make_scene(100, 4, seed=14)
        pairs = export_scene(scene, tmp_path, num_neighbors=1,
                             pixel_noise_sigma=1.0,
                             confidence_model="distance_decay")
        ref_id, nbr_id = pairs[0]
        cset = read_corr(tmp_path / "corr" / corr_filename(ref_id, nbr_id))
        conf = cset.data["confidence"]
        assert np.all((conf > 0.0) & (conf <= 1.0))
        assert np.any(conf < 1.0)
