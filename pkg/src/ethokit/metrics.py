"""Behavioral summary statistics over label and observation streams.

Time here is always seconds of *visible* time: spans carrying technical
codes (occlusion, out of frame/focus/sight) never enter a behavioral
denominator. Frame-indexed streams need the session VideoMeta to fix
the seconds-per-frame scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, NamedTuple, Sequence

from .core import LabelStream, ObsInterval, Segment, VideoMeta
from .ethogram import TECHNICAL_CODES

__all__ = [
    "TimeBudget",
    "TransitionMatrix",
    "ConfusionMatrix",
    "AgreementStats",
    "ClassScore",
    "ClassMetrics",
    "CostEstimate",
    "time_budget",
    "out_of_sight_fraction",
    "transition_matrix",
    "confusion",
    "cohens_kappa",
    "class_metrics",
    "gantt_segments",
    "annotation_cost",
    "OTHER_CODE",
]

# Reserved confusion-matrix bucket for codes outside the requested set.
OTHER_CODE = "other"


def _durations(stream, meta: VideoMeta | None) -> list[tuple[str, float]]:
    """(code, seconds) per stream element, in time order."""
    if isinstance(stream, LabelStream):
        if meta is None:
            raise ValueError("frame-indexed stream needs VideoMeta for a time scale")
        return [
            (seg.code, (seg.end_frame - seg.start_frame + 1) / meta.fps)
            for seg in stream.segments
        ]
    return [(iv.code, iv.end - iv.start) for iv in stream.intervals]


@dataclass(frozen=True)
class TimeBudget:
    """Seconds and proportion of visible time per behavioral code."""

    seconds: Mapping[str, float]  # per-code visible seconds
    t_visible: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "seconds", MappingProxyType(dict(self.seconds)))

    @property
    def proportions(self) -> dict[str, float]:
        return {code: t / self.t_visible for code, t in self.seconds.items()}

    def proportion(self, code: str) -> float:
        return self.seconds.get(code, 0.0) / self.t_visible


def time_budget(stream, ethogram=None, meta: VideoMeta | None = None) -> TimeBudget:
    """Visible-time budget; technical codes drop out of the denominator."""
    technical = ethogram.technical_codes() if ethogram is not None else TECHNICAL_CODES
    seconds: dict[str, float] = {}
    for code, dur in _durations(stream, meta):
        if code in technical:
            continue
        seconds[code] = seconds.get(code, 0.0) + dur
    t_visible = sum(seconds.values())
    if t_visible <= 0:
        raise ValueError("no visible time in stream")
    return TimeBudget(seconds, t_visible)


def out_of_sight_fraction(stream, ethogram=None, meta: VideoMeta | None = None) -> float:
    """Share of the recorded time carrying a technical code."""
    technical = ethogram.technical_codes() if ethogram is not None else TECHNICAL_CODES
    pairs = _durations(stream, meta)
    total = sum(dur for _, dur in pairs)
    if total <= 0:
        raise ValueError("empty stream")
    lost = sum(dur for code, dur in pairs if code in technical)
    return lost / total


@dataclass(frozen=True)
class TransitionMatrix:
    """Pairwise transition counts n_ij and row-stochastic P(j|i)."""

    codes: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", tuple(self.codes))
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        k = len(self.codes)
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValueError("counts must be square over codes")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("negative transition count")

    @property
    def probabilities(self) -> tuple[tuple[float, ...], ...]:
        rows = []
        for row in self.counts:
            total = sum(row)
            rows.append(tuple(c / total for c in row) if total else tuple(0.0 for _ in row))
        return tuple(rows)

    def probability(self, from_code: str, to_code: str) -> float:
        i = self.codes.index(from_code)
        j = self.codes.index(to_code)
        return self.probabilities[i][j]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def _sample_codes(stream, delta_s: float, meta: VideoMeta | None, technical) -> list[str | None]:
    """Point-in-time codes at t0, t0+delta, ... within the stream span.

    t0 anchors at the first instant carrying a non-technical code; None
    marks samples landing on gaps or technical time.
    """
    if isinstance(stream, LabelStream):
        if meta is None:
            raise ValueError("frame-indexed stream needs VideoMeta for a time scale")
        span_end = (stream.end_frame + 1) / meta.fps
        t0 = None
        for seg in stream.segments:
            if seg.code not in technical:
                t0 = seg.start_frame / meta.fps
                break

        def code_at(t: float) -> str | None:
            return stream.code_at(int(t * meta.fps))

    else:
        if not stream.intervals:
            return []
        span_end = stream.span[1]
        t0 = None
        for iv in stream.intervals:
            if iv.code not in technical:
                t0 = iv.start
                break
        code_at = stream.code_at
    if t0 is None:
        return []
    samples: list[str | None] = []
    k = 0
    while True:
        t = t0 + k * delta_s
        if t >= span_end:
            break
        code = code_at(t)
        samples.append(None if code is None or code in technical else code)
        k += 1
    return samples


def transition_matrix(
    streams: Sequence,
    delta_s: float,
    codes: Sequence[str],
    ethogram=None,
    meta: VideoMeta | None = None,
) -> TransitionMatrix:
    """Pool downsampled transition counts across streams.

    Each stream is sampled every delta_s seconds starting from its first
    visible sample; consecutive sample pairs with both codes in `codes`
    count, and pairs touching a technical code or coverage gap are
    skipped, never bridged.
    """
    if delta_s <= 0:
        raise ValueError(f"sampling interval must be positive, got {delta_s}")
    technical = ethogram.technical_codes() if ethogram is not None else TECHNICAL_CODES
    codes = tuple(codes)
    index = {code: i for i, code in enumerate(codes)}
    counts = [[0] * len(codes) for _ in codes]
    pairs = 0
    for stream in streams:
        samples = _sample_codes(stream, delta_s, meta, technical)
        for prev, cur in zip(samples, samples[1:]):
            if prev in index and cur in index:
                counts[index[prev]][index[cur]] += 1
                pairs += 1
    if pairs == 0:
        raise ValueError("no countable transition pairs")
    return TransitionMatrix(codes, tuple(tuple(row) for row in counts))


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts c_ab; rows are the reference method, columns the other."""

    codes: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "codes", tuple(self.codes))
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        k = len(self.codes)
        if len(self.counts) != k or any(len(row) != k for row in self.counts):
            raise ValueError("counts must be square over codes")
        if any(c < 0 for row in self.counts for c in row):
            raise ValueError("negative count")

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    def row_normalized(self) -> tuple[tuple[float, ...], ...]:
        rows = []
        for row in self.counts:
            total = sum(row)
            rows.append(tuple(c / total for c in row) if total else tuple(0.0 for _ in row))
        return tuple(rows)


def confusion(pairs, codes: Sequence[str]) -> ConfusionMatrix:
    """Cross-tabulate a PairedSeries; stray codes land in "other"."""
    base = tuple(codes)
    if len(pairs) == 0:
        raise ValueError("empty paired series")
    stray = any(ca not in base or cb not in base for _, ca, cb in pairs)
    full = base + (OTHER_CODE,) if stray else base
    index = {code: i for i, code in enumerate(full)}
    other = index.get(OTHER_CODE)
    counts = [[0] * len(full) for _ in full]
    for _, ca, cb in pairs:
        i = index.get(ca, other)
        j = index.get(cb, other)
        counts[i][j] += 1
    return ConfusionMatrix(full, tuple(tuple(row) for row in counts))


class AgreementStats(NamedTuple):
    """Observed/expected agreement and chance-corrected kappa."""

    p_observed: float
    p_expected: float
    kappa: float


def cohens_kappa(m: ConfusionMatrix) -> AgreementStats:
    """Chance-corrected agreement with marginal-product expectation."""
    total = m.total
    if total == 0:
        raise ValueError("empty confusion matrix")
    k = len(m.codes)
    row_totals = [sum(m.counts[i]) for i in range(k)]
    col_totals = [sum(m.counts[i][j] for i in range(k)) for j in range(k)]
    p_o = sum(m.counts[i][i] for i in range(k)) / total
    p_e = sum(row_totals[i] * col_totals[i] for i in range(k)) / (total * total)
    if p_e >= 1.0:
        raise ValueError("degenerate marginals: expected agreement is 1")
    return AgreementStats(p_o, p_e, (p_o - p_e) / (1.0 - p_e))


class ClassScore(NamedTuple):
    """Per-class scores; None marks an undefined (0/0) quantity."""

    code: str
    precision: float | None
    recall: float | None
    f1: float | None


@dataclass(frozen=True)
class ClassMetrics:
    """Per-class precision/recall/F1 plus their unweighted means.

    Macro averages skip classes whose quantity is undefined; they are
    None only when no class defines the quantity at all.
    """

    per_class: tuple[ClassScore, ...]
    macro_precision: float | None
    macro_recall: float | None
    macro_f1: float | None

    def score(self, code: str) -> ClassScore:
        for item in self.per_class:
            if item.code == code:
                return item
        raise KeyError(code)


def class_metrics(m: ConfusionMatrix) -> ClassMetrics:
    """Reference on rows, prediction on columns."""
    k = len(m.codes)
    row_totals = [sum(m.counts[i]) for i in range(k)]
    col_totals = [sum(m.counts[i][j] for i in range(k)) for j in range(k)]
    scores = []
    for i, code in enumerate(m.codes):
        tp = m.counts[i][i]
        precision = tp / col_totals[i] if col_totals[i] else None
        recall = tp / row_totals[i] if row_totals[i] else None
        if precision is None or recall is None:
            f1 = None
        elif precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        scores.append(ClassScore(code, precision, recall, f1))

    def macro(values: list[float | None]) -> float | None:
        defined = [v for v in values if v is not None]
        return sum(defined) / len(defined) if defined else None

    return ClassMetrics(
        tuple(scores),
        macro([s.precision for s in scores]),
        macro([s.recall for s in scores]),
        macro([s.f1 for s in scores]),
    )


def gantt_segments(stream):
    """Maximal constant-code runs in time order, for timeline plotting.

    Frame-indexed input yields inclusive frame Segments; interval input
    yields half-open ObsIntervals. Adjacent equal-code entries merge.
    """
    if isinstance(stream, LabelStream):
        merged: list[Segment] = []
        for seg in stream.segments:
            if (
                merged
                and merged[-1].code == seg.code
                and seg.start_frame == merged[-1].end_frame + 1
            ):
                merged[-1] = Segment(merged[-1].start_frame, seg.end_frame, seg.code)
            else:
                merged.append(seg)
        return merged
    out: list[ObsInterval] = []
    for iv in stream.intervals:
        if out and out[-1].code == iv.code and out[-1].end == iv.start:
            out[-1] = ObsInterval(out[-1].start, iv.end, iv.code)
        else:
            out.append(iv)
    return out


@dataclass(frozen=True)
class CostEstimate:
    """Wall-clock annotation effort: total_s = rate * n * t."""

    n_individuals: int
    duration_s: float
    rate: float

    @property
    def total_s(self) -> float:
        return self.rate * self.n_individuals * self.duration_s

    @property
    def total_min(self) -> float:
        return self.total_s / 60.0


def annotation_cost(n: int, t: float, rate: float = 1.5) -> CostEstimate:
    """Effort to annotate n individuals over t seconds of video.

    The default rate folds in playback plus correction overhead: about
    1.5x real time per individual.
    """
    if n < 1:
        raise ValueError(f"need at least one individual, got {n}")
    if t <= 0:
        raise ValueError(f"duration must be positive, got {t}")
    return CostEstimate(n, t, rate)
