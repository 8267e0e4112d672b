"""Proximity-based social interaction detection between tracked animals.

An interaction is a sustained stretch of frames where two animals'
bounding boxes overlap by more than a threshold fraction. Counts are
normalized by the number of possible pairs per species combination so
groups of different sizes are comparable.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

from .core import AnalysisParams, BoundingBox, LabelStream, Track

__all__ = [
    "InteractionEvent",
    "OverlapEntry",
    "OverlapMatrix",
    "overlap_ratio",
    "detect_interactions",
    "tag_interactions",
    "overlap_summary",
    "dump_interaction_events",
    "dump_overlap_matrix",
]


def overlap_ratio(a: BoundingBox, b: BoundingBox, metric: str = "min_area") -> float:
    """Fraction of box overlap on one frame.

    min_area (default) divides the intersection by the smaller box, so
    0.5 reads as "half of the smaller animal is covered" even when a
    giraffe box dwarfs a zebra box; iou divides by the union.
    """
    if a.frame != b.frame:
        raise ValueError(f"boxes are from different frames ({a.frame} vs {b.frame})")
    ix = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    iy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    # rounding in the extent math can push inter one ulp past the denominator
    if metric == "min_area":
        return min(1.0, inter / min(a.area, b.area))
    if metric == "iou":
        return min(1.0, inter / (a.area + b.area - inter))
    raise ValueError(f"unknown overlap metric {metric!r}")


@dataclass(frozen=True)
class InteractionEvent:
    """One sustained overlap run between a canonical track pair (a < b)."""

    track_a: str
    track_b: str
    species_a: str
    species_b: str
    start_frame: int
    end_frame: int  # inclusive
    mean_ratio: float
    tag: str = ""

    def __post_init__(self) -> None:
        if self.track_a >= self.track_b:
            raise ValueError(f"pair not in canonical order: {self.track_a!r} !< {self.track_b!r}")
        if self.end_frame < self.start_frame:
            raise ValueError("event ends before it starts")

    @property
    def frame_count(self) -> int:
        return self.end_frame - self.start_frame + 1

    @property
    def species_pair(self) -> tuple[str, str]:
        return tuple(sorted((self.species_a, self.species_b)))


def detect_interactions(
    tracks: Sequence[Track], params: AnalysisParams | None = None
) -> list[InteractionEvent]:
    """Find runs of >threshold overlap lasting >= min_overlap_frames.

    Both cutoffs come from params; the ratio threshold is strict, so a
    frame at exactly the threshold breaks a run.
    """
    if params is None:
        params = AnalysisParams()
    events: list[InteractionEvent] = []
    active = sorted((t for t in tracks if not t.excluded and t.boxes), key=lambda t: t.track_id)
    for i, ta in enumerate(active):
        frames_a = {box.frame: box for box in ta.boxes}
        for tb in active[i + 1 :]:
            if tb.track_id == ta.track_id:
                raise ValueError(f"duplicate track id {ta.track_id!r}")
            shared = sorted(frames_a.keys() & {box.frame for box in tb.boxes})
            run: list[tuple[int, float]] = []
            for frame in shared:
                ratio = overlap_ratio(frames_a[frame], tb.box_at(frame), params.overlap_metric)
                contiguous = run and frame == run[-1][0] + 1
                if ratio > params.overlap_ratio_threshold and (contiguous or not run):
                    run.append((frame, ratio))
                    continue
                _close_run(run, ta, tb, params, events)
                run = [(frame, ratio)] if ratio > params.overlap_ratio_threshold else []
            _close_run(run, ta, tb, params, events)
    events.sort(key=lambda e: (e.track_a, e.track_b, e.start_frame))
    return events


def _close_run(run, ta: Track, tb: Track, params: AnalysisParams, events: list) -> None:
    if len(run) >= params.min_overlap_frames:
        frames = [f for f, _ in run]
        mean = sum(r for _, r in run) / len(run)
        events.append(
            InteractionEvent(
                ta.track_id, tb.track_id, ta.species, tb.species, frames[0], frames[-1], mean
            )
        )


def tag_interactions(
    events: Sequence[InteractionEvent], labels: Sequence[LabelStream]
) -> list[InteractionEvent]:
    """Attach to each event the modal concurrent code pair, as "A|B".

    Frames where either animal lacks a label are skipped; events with no
    jointly labeled frame keep an empty tag.
    """
    by_track: dict[str, list[LabelStream]] = {}
    for stream in labels:
        by_track.setdefault(stream.track_id, []).append(stream)

    def code_at(track_id: str, frame: int) -> str | None:
        for stream in by_track.get(track_id, []):
            code = stream.code_at(frame)
            if code is not None:
                return code
        return None

    tagged = []
    for event in events:
        tally: dict[tuple[str, str], int] = {}
        for frame in range(event.start_frame, event.end_frame + 1):
            ca = code_at(event.track_a, frame)
            cb = code_at(event.track_b, frame)
            if ca is None or cb is None:
                continue
            tally[(ca, cb)] = tally.get((ca, cb), 0) + 1
        if tally:
            best = max(tally.values())
            pair = sorted(p for p, n in tally.items() if n == best)[0]
            tag = f"{pair[0]}|{pair[1]}"
        else:
            tag = ""
        tagged.append(
            InteractionEvent(
                event.track_a,
                event.track_b,
                event.species_a,
                event.species_b,
                event.start_frame,
                event.end_frame,
                event.mean_ratio,
                tag,
            )
        )
    return tagged


class OverlapEntry(NamedTuple):
    """One species-pair row of the normalized overlap summary."""

    species_a: str
    species_b: str
    overlap_count: int
    possible_pairs: int

    @property
    def normalized(self) -> float:
        return self.overlap_count / self.possible_pairs if self.possible_pairs else 0.0


@dataclass(frozen=True)
class OverlapMatrix:
    """Per species-pair overlap totals, normalized per possible pair."""

    entries: tuple[OverlapEntry, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))

    def entry(self, species_a: str, species_b: str) -> OverlapEntry:
        key = tuple(sorted((species_a, species_b)))
        for item in self.entries:
            if (item.species_a, item.species_b) == key:
                return item
        raise KeyError(key)

    @classmethod
    def from_counts(
        cls, composition: Mapping[str, int], counts: Mapping[tuple[str, str], int]
    ) -> OverlapMatrix:
        """Build a summary from already-tallied per-pair frame counts."""
        for pair in counts:
            for species in pair:
                if species not in composition:
                    raise ValueError(f"species {species!r} missing from composition")
        entries = []
        for sa, sb, possible in _possible_pairs(composition):
            entries.append(OverlapEntry(sa, sb, int(counts.get((sa, sb), 0)), possible))
        return cls(tuple(entries))


def _possible_pairs(composition: Mapping[str, int]):
    """(species_a, species_b, possible) over all unordered combinations."""
    names = sorted(composition)
    for i, sa in enumerate(names):
        na = composition[sa]
        yield sa, sa, na * (na - 1) // 2
        for sb in names[i + 1 :]:
            yield sa, sb, na * composition[sb]


def overlap_summary(
    events: Sequence[InteractionEvent], composition: Mapping[str, int]
) -> OverlapMatrix:
    """Total qualifying frames per species pair, per possible pair.

    Same-species pairs number n(n-1)/2 and cross-species pairs n1*n2;
    pairs with no events report zero.
    """
    counts: dict[tuple[str, str], int] = {}
    for event in events:
        for species in event.species_pair:
            if species not in composition:
                raise ValueError(f"species {species!r} missing from composition")
        key = event.species_pair
        counts[key] = counts.get(key, 0) + event.frame_count
    return OverlapMatrix.from_counts(composition, counts)


def dump_interaction_events(events: Sequence[InteractionEvent]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["a", "b", "start_frame", "end_frame", "frames", "mean_ratio", "tag"])
    for e in events:
        writer.writerow(
            [e.track_a, e.track_b, e.start_frame, e.end_frame, e.frame_count, repr(e.mean_ratio), e.tag]
        )
    return out.getvalue()


def dump_overlap_matrix(matrix: OverlapMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["species_a", "species_b", "overlap_count", "possible_pairs", "normalized"])
    for e in matrix.entries:
        writer.writerow(
            [e.species_a, e.species_b, e.overlap_count, e.possible_pairs, f"{e.normalized:.2f}"]
        )
    return out.getvalue()
