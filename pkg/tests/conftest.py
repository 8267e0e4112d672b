"""Shared fixtures: a reference session and small stream builders."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from ethokit import (
    BoundingBox,
    LabelStream,
    ObservationStream,
    ObsInterval,
    Segment,
    Track,
    VideoMeta,
    default_ethogram,
)

T0 = datetime(2023, 6, 1, 8, 30, 0, tzinfo=timezone.utc)
EPOCH0 = T0.timestamp()


@pytest.fixture
def meta() -> VideoMeta:
    return VideoMeta("sess01", 1920, 1080, T0, fps=30.0)


@pytest.fixture
def ethogram():
    return default_ethogram()


def make_track(
    track_id: str = "t1",
    species: str = "grevys_zebra",
    frames=range(0, 100),
    x: float = 500.0,
    y: float = 400.0,
    w: float = 60.0,
    h: float = 40.0,
    excluded: bool = False,
) -> Track:
    boxes = tuple(BoundingBox(f, x, y, w, h) for f in frames)
    return Track(track_id, species, boxes, excluded=excluded)


def make_labels(*triples, track_id: str = "t1") -> LabelStream:
    """triples are flat (start_frame, end_frame, code) groups."""
    segs = tuple(Segment(*triples[i : i + 3]) for i in range(0, len(triples), 3))
    return LabelStream(track_id, segs)


def obs(subject: str, method: str, *triples, observer: str = "obs1") -> ObservationStream:
    """triples are (start_offset_s, end_offset_s, code) relative to T0."""
    intervals = tuple(ObsInterval(EPOCH0 + s, EPOCH0 + e, code) for s, e, code in triples)
    return ObservationStream(subject, method, intervals, observer)
