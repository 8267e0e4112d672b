"""Crop-window geometry and mini-scene extraction."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ethokit import (
    AnalysisParams,
    BoundingBox,
    Rect,
    Track,
    VideoMeta,
    crop_window,
    dump_miniscene_manifest,
    extract_miniscenes,
)
from conftest import T0, make_labels, make_track


class TestCropWindow:
    def test_symmetric_center(self, meta):
        box = BoundingBox(0, 930.0, 520.0, 60.0, 40.0)  # center (960, 540)
        assert crop_window(box, 400, 300, meta) == Rect(760.0, 390.0, 400, 300)

    def test_clamped_to_origin(self, meta):
        box = BoundingBox(0, 0.0, 0.0, 20.0, 20.0)  # center (10, 10)
        assert crop_window(box, 400, 300, meta) == Rect(0.0, 0.0, 400, 300)

    def test_clamped_to_far_edge(self, meta):
        box = BoundingBox(0, 1880.0, 1050.0, 30.0, 20.0)  # center (1895, 1060)
        assert crop_window(box, 400, 300, meta) == Rect(1520.0, 780.0, 400, 300)

    def test_center_out_of_bounds(self, meta):
        box = BoundingBox(0, 1900.0, 500.0, 60.0, 40.0)  # center x = 1930
        with pytest.raises(ValueError, match="center out of bounds"):
            crop_window(box, 400, 300, meta)

    def test_output_larger_than_frame(self, meta):
        box = BoundingBox(0, 930.0, 520.0, 60.0, 40.0)
        with pytest.raises(ValueError):
            crop_window(box, 2000, 300, meta)

    def test_non_positive_output(self, meta):
        box = BoundingBox(0, 930.0, 520.0, 60.0, 40.0)
        with pytest.raises(ValueError):
            crop_window(box, 0, 300, meta)

    @given(
        cx=st.floats(0, 1920, allow_nan=False),
        cy=st.floats(0, 1080, allow_nan=False),
        out_w=st.integers(2, 1920),
        out_h=st.integers(2, 1080),
    )
    @settings(max_examples=200)
    def test_window_inside_frame_and_contains_center(self, cx, cy, out_w, out_h):
        meta = VideoMeta("hyp", 1920, 1080, T0, fps=30.0)
        box = BoundingBox(0, cx - 5.0, cy - 5.0, 10.0, 10.0)
        rect = crop_window(box, out_w, out_h, meta)
        assert rect.w == out_w and rect.h == out_h
        assert 0 <= rect.x and rect.x + rect.w <= meta.width_px
        assert 0 <= rect.y and rect.y + rect.h <= meta.height_px
        assert rect.x <= cx <= rect.x + rect.w
        assert rect.y <= cy <= rect.y + rect.h


class TestExtractMiniscenes:
    def test_89_frames_dropped(self, meta):
        tracks = [make_track(frames=range(0, 89))]
        labels = [make_labels(0, 88, "G")]
        assert extract_miniscenes(tracks, labels, AnalysisParams(), meta) == []

    def test_90_frames_retained(self, meta):
        tracks = [make_track(frames=range(0, 90))]
        labels = [make_labels(0, 89, "G")]
        scenes = extract_miniscenes(tracks, labels, AnalysisParams(), meta)
        assert len(scenes) == 1
        assert (scenes[0].start_frame, scenes[0].end_frame) == (0, 89)
        assert scenes[0].n_frames == 90

    def test_gap_splits_then_filters(self, meta):
        # 100 frames, a 40-frame hole, then 60 frames: only the first half survives
        frames = list(range(0, 100)) + list(range(140, 200))
        tracks = [make_track(frames=frames)]
        labels = [make_labels(0, 99, "G"), make_labels(140, 199, "G")]
        scenes = extract_miniscenes(tracks, labels, AnalysisParams(), meta)
        assert [(s.start_frame, s.end_frame) for s in scenes] == [(0, 99)]

    def test_gap_at_threshold_not_split(self, meta):
        # 30 missing frames is the default limit, not over it
        frames = list(range(0, 60)) + list(range(90, 150))
        tracks = [make_track(frames=frames)]
        labels = [make_labels(0, 149, "G")]
        scenes = extract_miniscenes(tracks, labels, AnalysisParams(), meta)
        assert [(s.start_frame, s.end_frame) for s in scenes] == [(0, 149)]

    def test_excluded_track_skipped(self, meta):
        tracks = [make_track(frames=range(0, 120), excluded=True)]
        labels = [make_labels(0, 119, "G")]
        assert extract_miniscenes(tracks, labels, AnalysisParams(), meta) == []

    def test_missing_label_coverage(self, meta):
        tracks = [make_track(frames=range(0, 120))]
        labels = [make_labels(0, 50, "G")]
        with pytest.raises(ValueError, match=r"t1.*0.*119"):
            extract_miniscenes(tracks, labels, AnalysisParams(), meta)

    def test_windows_follow_box_centers(self, meta):
        tracks = [make_track(frames=range(0, 90), x=900.0, y=500.0, w=60.0, h=40.0)]
        labels = [make_labels(0, 89, "W")]
        (scene,) = extract_miniscenes(tracks, labels, AnalysisParams(), meta)
        assert len(scene.windows) == 90
        assert all(w.cx == 930.0 and w.cy == 520.0 for w in scene.windows)

    def test_count_bounded_by_segments(self, meta):
        frames = list(range(0, 95)) + list(range(200, 300)) + list(range(400, 450))
        tracks = [make_track(frames=frames)]
        labels = [make_labels(0, 94, "G"), make_labels(200, 299, "W"), make_labels(400, 449, "G")]
        scenes = extract_miniscenes(tracks, labels, AnalysisParams(), meta)
        assert len(scenes) == 2  # the 50-frame tail segment is dropped


class TestManifest:
    def test_constant_center_collapses_rows(self, meta):
        tracks = [make_track(frames=range(0, 90))]
        labels = [make_labels(0, 89, "G")]
        scenes = extract_miniscenes(tracks, labels, AnalysisParams(), meta)
        text = dump_miniscene_manifest(scenes)
        lines = text.strip().split("\n")
        assert lines[0] == "track_id,start_frame,end_frame,cx,cy,out_w,out_h"
        assert len(lines) == 2  # one maximal run: center never moves

    def test_moving_center_splits_rows(self, meta):
        boxes = tuple(
            BoundingBox(f, 500.0 + (10.0 if f >= 45 else 0.0), 400.0, 60.0, 40.0)
            for f in range(0, 90)
        )
        tracks = [Track("t1", "grevys_zebra", boxes)]
        labels = [make_labels(0, 89, "G")]
        scenes = extract_miniscenes(tracks, labels, AnalysisParams(), meta)
        lines = dump_miniscene_manifest(scenes).strip().split("\n")
        assert len(lines) == 3
        assert lines[1].startswith("t1,0,44,")
        assert lines[2].startswith("t1,45,89,")
