"""Synthetic scene ground-truth consistency tests.

The harness is only useful if its analytic quantities agree with its
rendered pixels, so most tests here cross-check the two: analytic
homographies against warped renders and estimated homographies, analytic
masks against the rendered patch region, and exact reconstructions
against reprojection.
"""

import math

import numpy as np
import pytest

from egofields import synthetic as syn
from egofields.features import detect_and_describe, match
from egofields.geometry import mean_reprojection_error
from egofields.overlap import corners, estimate_homography

W, H = 456, 256


class TestAnalyticHomography:
    def test_static_scene_all_overlaps_one(self):
        scene = syn.static_scene(seed=0, n_frames=4)
        for i in range(4):
            for j in range(4):
                assert syn.analytic_overlap(scene, i, j) == pytest.approx(1.0)

    def test_pure_rotation_equals_krk(self):
        scene = syn.panning_scene(seed=1, n_frames=8, yaw_step_deg=2.0)
        k = scene.intrinsics.calibration_matrix()
        i, j = 1, 5
        r_rel = scene.poses[j].rotation_matrix() @ scene.poses[i].rotation_matrix().T
        expected = k @ r_rel @ np.linalg.inv(k)
        expected /= np.linalg.norm(expected)
        got = syn.analytic_homography(scene, i, j).h
        np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_plane_points_follow_homography(self):
        scene = syn.translating_scene(seed=2, n_frames=5)
        hom = syn.analytic_homography(scene, 0, 4)
        idx, pixels0, _ = syn.visible_points(scene, 0)
        idx4, pixels4, _ = syn.visible_points(scene, 4)
        common = sorted(set(idx) & set(idx4))[:30]
        lookup0 = dict(zip(idx, pixels0))
        lookup4 = dict(zip(idx4, pixels4))
        src = np.array([lookup0[i] for i in common])
        expected = np.array([lookup4[i] for i in common])
        warped, _ = hom.apply(src)
        np.testing.assert_allclose(warped, expected, atol=1e-8)

    def test_render_is_warp_consistent(self):
        import cv2

        scene = syn.panning_scene(seed=3, n_frames=6, yaw_step_deg=1.5)
        img0 = syn.render(scene, 0)
        img3 = syn.render(scene, 3)
        hom = syn.analytic_homography(scene, 0, 3)
        warped = cv2.warpPerspective(img0.astype(np.float64), hom.h / hom.h[2, 2], (W, H))
        region = warped > 0
        # Interpolation softens texture; agreement should still be tight.
        diff = np.abs(warped[region] - img3.astype(np.float64)[region])
        assert np.mean(diff) < 0.03

    def test_estimated_matches_analytic_within_one_pixel(self):
        scene = syn.panning_scene(seed=4, n_frames=6, yaw_step_deg=1.5)
        fa = detect_and_describe(syn.render(scene, 0))
        fb = detect_and_describe(syn.render(scene, 4))
        matches = match(fa, fb)
        hom, _ = estimate_homography(matches, fa.keypoints, fb.keypoints)
        truth = syn.analytic_homography(scene, 0, 4)
        got, _ = hom.apply(corners(W, H))
        expected, _ = truth.apply(corners(W, H))
        assert np.abs(got - expected).max() < 1.0


class TestHotspotPreset:
    def test_dwell_collapses_transition_splits(self):
        scene = syn.hotspot_scene(seed=5, n_dwell=40, n_pan=12, n_dwell2=40, pan_total_deg=30)
        kept, windows = syn.analytic_filter(scene, 0.9)
        assert kept[0] == 0
        assert len(kept) >= 3
        # Dwell overlap never threatens the threshold.
        for j in (1, 13, 39):
            assert syn.analytic_overlap(scene, 0, j) > 0.97
        # Every interior anchor sits in or at the edge of the pan segment.
        for anchor in kept[1:-1]:
            assert 40 <= anchor < 52 + 1
        # Kept density: transition >> dwell (the whole point of the filter).
        pan_kept = sum(1 for a in kept if 40 <= a < 52)
        dwell_kept = sum(1 for a in kept if a < 40 or a >= 52)
        assert pan_kept / 12 > 4 * (dwell_kept / 80)

    def test_windows_partition(self):
        scene = syn.hotspot_scene(seed=6, n_dwell=15, n_pan=8, n_dwell2=15, pan_total_deg=25)
        kept, windows = syn.analytic_filter(scene, 0.9)
        cursor = 0
        for anchor, length in windows:
            assert anchor == cursor
            cursor += length
        assert cursor == scene.n_frames
        assert kept == [a for a, _ in windows]


class TestObjectMasks:
    def test_mask_matches_rendered_patch_region(self):
        scene = syn.translating_scene(seed=7, n_frames=3)
        patch = scene.patches[0]
        mask = syn.object_mask(scene, 1, patch)
        # Recompute the patch region the renderer used, from plane coords.
        pose = scene.poses[1]
        intr = scene.intrinsics
        cx, cy = intr.principal_point
        xs, ys = np.meshgrid(np.arange(W, dtype=float), np.arange(H, dtype=float))
        dirs = np.stack([(xs - cx) / intr.fx, (ys - cy) / intr.fy, np.ones_like(xs)], axis=-1)
        r = pose.rotation_matrix()
        dirs_world = dirs @ r
        center = pose.camera_center()
        n = scene.plane.normal
        s = np.dot(n, scene.plane.origin - center) / (dirs_world @ n)
        pts = center + s[..., None] * dirs_world
        rel = pts - scene.plane.origin
        pu = rel @ scene.plane.u_axis
        pv = rel @ scene.plane.v_axis
        region = (
            (pu >= patch.u_min) & (pu <= patch.u_max)
            & (pv >= patch.v_min) & (pv <= patch.v_max)
        )
        agreement = (mask == region).mean()
        assert agreement > 0.999

    def test_mask_empty_when_object_behind_camera(self):
        scene = syn.leaving_frustum_scene(seed=8, n_frames=40)
        late = syn.object_mask(scene, 39, scene.patches[0])
        assert not late.any()

    def test_mask_present_initially(self):
        scene = syn.leaving_frustum_scene(seed=8, n_frames=40)
        first = syn.object_mask(scene, 0, scene.patches[0])
        assert first.sum() > 2000


class TestSceneReconstruction:
    def test_exact_reconstruction_reprojects_exactly(self):
        scene = syn.translating_scene(seed=9, n_frames=5)
        recon = syn.scene_reconstruction(scene)
        assert recon.total_frame_count == 5
        assert len(recon.points) > 50
        assert mean_reprojection_error(recon) == pytest.approx(0.0, abs=1e-9)

    def test_visible_points_drop_out_of_frustum(self):
        scene = syn.leaving_frustum_scene(seed=10, n_frames=40)
        early, _, _ = syn.visible_points(scene, 0)
        late, _, _ = syn.visible_points(scene, 39)
        assert len(early) > 50
        assert len(late) == 0


class TestPersistence:
    def test_scene_json_round_trip(self, tmp_path):
        scene = syn.translating_scene(seed=11, n_frames=4)
        path = tmp_path / "scene.json"
        syn.scene_to_json(scene, path)
        back = syn.scene_from_json(path)
        assert back.n_frames == scene.n_frames
        np.testing.assert_allclose(back.points, scene.points)
        np.testing.assert_array_equal(
            syn.render(back, 2), syn.render(scene, 2)
        )

    def test_render_to_directory_matches_memory(self, tmp_path):
        from egofields.features import _to_uint8_gray
        from egofields.filtering import ImageDirectorySource

        scene = syn.static_scene(seed=12, n_frames=3)
        out = syn.render_to_directory(scene, tmp_path / "frames")
        source = ImageDirectorySource(out)
        assert len(source) == 3
        np.testing.assert_array_equal(
            source.load(1), _to_uint8_gray(syn.render(scene, 1))
        )

    def test_camera_on_plane_rejected(self):
        scene = syn.static_scene(seed=13, n_frames=1)
        scene.poses[0] = syn.look_pose((0.0, 0.0, 4.0))  # on the plane
        with pytest.raises(syn.RenderError):
            syn.render(scene, 0)
