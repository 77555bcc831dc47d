"""Greedy window filter tests against analytic scene oracles."""

import numpy as np
import pytest

from egofields import synthetic as syn
from egofields.filtering import (
    ArrayFrameSource,
    FilterConfig,
    FilterResult,
    FrameLoadError,
    FrameManifestSource,
    ImageDirectorySource,
    compare_uniform,
    filter_frames,
    greedy_windows,
)


class FlakySource(ArrayFrameSource):
    """Array source that fails to decode chosen indices."""

    def __init__(self, frames, bad_indices):
        super().__init__(frames)
        self._bad = set(bad_indices)

    def load(self, index):
        if index in self._bad:
            raise OSError("simulated decode failure")
        return super().load(index)


@pytest.fixture(scope="module")
def hotspot():
    scene = syn.hotspot_scene(seed=41, n_dwell=25, n_pan=10, n_dwell2=25, pan_total_deg=25)
    frames = [syn.render(scene, i) for i in range(scene.n_frames)]
    return scene, frames


class TestGreedyCore:
    def test_partition_and_anchor_properties(self):
        scores = {(i, j): 1.0 if j - i < 4 else 0.0 for i in range(12) for j in range(12)}
        kept, windows = greedy_windows(12, lambda a, b: scores[(a, b)], 0.9)
        assert kept == [0, 4, 8]
        assert windows == [(0, 4), (4, 4), (8, 4)]

    def test_max_window_caps_run_length(self):
        kept, windows = greedy_windows(10, lambda a, b: 1.0, 0.9, max_window=3)
        assert kept == [0, 3, 6, 9]

    def test_threshold_monotonicity(self):
        rng = np.random.default_rng(4)
        score = {}
        for i in range(30):
            for j in range(i + 1, 30):
                score[(i, j)] = float(np.clip(1.0 - 0.03 * (j - i) + rng.normal(0, 0.01), 0, 1))
        kept_low, _ = greedy_windows(30, lambda a, b: score[(a, b)], 0.85)
        kept_high, _ = greedy_windows(30, lambda a, b: score[(a, b)], 0.95)
        assert len(kept_high) >= len(kept_low)

    def test_single_frame(self):
        kept, windows = greedy_windows(1, lambda a, b: 0.0, 0.9)
        assert kept == [0]
        assert windows == [(0, 1)]


class TestFilterFrames:
    def test_identical_frames_keep_one(self):
        frame = syn.render(syn.static_scene(seed=42, n_frames=1), 0)
        result = filter_frames([frame] * 7)
        assert result.kept == [0]
        assert result.discard_rate == pytest.approx(6 / 7)
        assert result.windows == [(0, 7)]

    def test_abrupt_cut_keeps_two(self):
        scene = syn.abrupt_cut_scene(seed=43, n_first=4, n_second=4)
        result = filter_frames(syn.SceneFrameSource(scene))
        assert result.kept == [0, 4]

    def test_panning_matches_analytic_within_one_frame(self):
        scene = syn.panning_scene(seed=44, n_frames=30, yaw_step_deg=2.0)
        expected, _ = syn.analytic_filter(scene, 0.9)
        result = filter_frames(syn.SceneFrameSource(scene))
        assert len(result.kept) == len(expected)
        for got, want in zip(result.kept, expected):
            assert abs(got - want) <= 1

    def test_hotspot_dwell_density(self, hotspot):
        scene, frames = hotspot
        result = filter_frames(frames)
        pan_range = range(25, 35)
        pan_kept = sum(1 for k in result.kept if k in pan_range)
        dwell_kept = len(result.kept) - pan_kept
        assert pan_kept / len(pan_range) > 3 * (dwell_kept / 50)

    def test_idempotent_on_kept_frames(self, hotspot):
        scene, frames = hotspot
        first = filter_frames(frames)
        again = filter_frames([frames[i] for i in first.kept])
        assert again.kept == list(range(len(first.kept)))

    def test_matching_failure_closes_window(self):
        textured = syn.render(syn.static_scene(seed=45, n_frames=1), 0)
        flat = np.full_like(textured, 0.5)
        result = filter_frames([textured, textured, flat, textured])
        # The featureless frame scores overlap 0 against its anchor and
        # starts a new window; it cannot silently extend the first one.
        assert result.kept[0] == 0
        assert 2 in result.kept
        logged = {(p.i, p.j): p.r_tilde for p in result.pair_log}
        assert logged[(0, 2)] == 0.0

    def test_threshold_override(self, hotspot):
        scene, frames = hotspot
        base = filter_frames(frames)
        strict = filter_frames(frames, threshold=0.97)
        assert len(strict.kept) >= len(base.kept)
        assert strict.threshold == 0.97

    def test_deterministic_across_threads(self, hotspot):
        scene, frames = hotspot
        one = filter_frames(frames, threads=1)
        four = filter_frames(frames, threads=4)
        assert one.kept == four.kept

    def test_frame_stride(self):
        scene = syn.static_scene(seed=46, n_frames=10)
        frames = [syn.render(scene, 0)] * 10
        result = filter_frames(frames, FilterConfig(frame_stride=3))
        assert result.kept == [0]
        assert result.windows[-1][0] + result.windows[-1][1] == 10

    def test_unreadable_frame_aborts_by_default(self):
        frame = syn.render(syn.static_scene(seed=47, n_frames=1), 0)
        source = FlakySource([frame] * 5, bad_indices=[2])
        with pytest.raises(FrameLoadError) as excinfo:
            filter_frames(source)
        assert excinfo.value.index == 2

    def test_unreadable_frame_skipped_when_configured(self):
        frame = syn.render(syn.static_scene(seed=48, n_frames=1), 0)
        source = FlakySource([frame] * 5, bad_indices=[2])
        result = filter_frames(source, FilterConfig(skip_unreadable=True))
        assert result.kept == [0]
        assert result.skipped == [2]

    def test_empty_source_rejected(self):
        with pytest.raises(ValueError):
            filter_frames([])


class TestCompareUniform:
    def test_spec_examples(self):
        assert compare_uniform(100, 10).kept == list(range(0, 100, 10))
        assert compare_uniform(100, 1).kept == [0]
        assert compare_uniform(5, 5).kept == [0, 1, 2, 3, 4]

    def test_result_invariants(self):
        result = compare_uniform(10, 3)
        assert result.kept == [0, 4, 8]
        assert sum(length for _, length in result.windows) == 10

    def test_bad_counts_rejected(self):
        with pytest.raises(ValueError):
            compare_uniform(10, 0)


class TestFrameSources:
    def test_directory_source(self, tmp_path):
        scene = syn.static_scene(seed=49, n_frames=3)
        out = syn.render_to_directory(scene, tmp_path / "frames")
        source = ImageDirectorySource(out, fps=5.0)
        assert len(source) == 3
        assert source.name(0) == "frame_000000.png"
        assert source.timestamp(2) == pytest.approx(0.4)
        assert source.load(1).shape == (256, 456)

    def test_manifest_source(self, tmp_path):
        scene = syn.static_scene(seed=50, n_frames=3)
        out = syn.render_to_directory(scene, tmp_path / "frames")
        source = FrameManifestSource(out / "frames.txt")
        assert len(source) == 3
        assert source.timestamp(1) == pytest.approx(0.1)
        assert source.load(0).dtype == np.uint8

    def test_result_validation(self):
        with pytest.raises(ValueError):
            FilterResult(kept=[3, 1], windows=[(0, 4)], pair_log=[], total=4, threshold=0.9)
        with pytest.raises(ValueError):
            FilterResult(kept=[0], windows=[(0, 2)], pair_log=[], total=4, threshold=0.9)
