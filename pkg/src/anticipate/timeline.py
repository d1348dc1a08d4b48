"""Frame-wise label timelines and their run-length segment views.

A video's labeling is a sequence of integer class indices, one per frame
(:class:`FrameTimeline`). The equivalent run-length view is an ordered
list of ``(label, length)`` segments (:class:`SegmentSequence`). Both
directions of the conversion are exact inverses. All types are immutable
values after construction and safe to share between workers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "LabelVocabulary",
    "FrameTimeline",
    "Segment",
    "SegmentSequence",
    "ObservationSplit",
    "floor_frac",
    "round_half_up",
    "segments_from_frames",
    "frames_from_segments",
    "merge_adjacent",
    "split_observation",
    "truncate_future",
]


def floor_frac(fraction: float, total: int) -> int:
    """Number of frames in a fractional span: ``floor(fraction * total)``.

    A 1e-9 guard absorbs binary-representation slop so that exact
    products such as 0.3 * 10 floor to 3, not 2.
    """
    return int(math.floor(fraction * total + 1e-9))


def round_half_up(x: float) -> int:
    """Round to the nearest integer; exact halves round up (no banker's rounding)."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LabelVocabulary:
    """Ordered set of class names; a name's position is its class index."""

    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise ValueError("vocabulary must contain at least one class name")
        if len(set(self.names)) != len(self.names):
            dupes = sorted({n for n in self.names if self.names.count(n) > 1})
            raise ValueError(f"duplicate class names in vocabulary: {dupes}")

    def __len__(self) -> int:
        return len(self.names)

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown class name {name!r}") from None

    def name_of(self, index: int) -> str:
        return self.names[index]

    def content_hash(self) -> str:
        """Stable hex digest of the ordered class names.

        Recorded in model checkpoints so a model is never applied to a
        corpus with a different class indexing.
        """
        return hashlib.sha256("\n".join(self.names).encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class FrameTimeline:
    """Per-frame class indices for one video (read-only int64 array)."""

    frames: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.int64).copy()
        if arr.ndim != 1:
            raise ValueError(f"timeline must be 1-D, got shape {arr.shape}")
        if arr.size < 1:
            raise ValueError("timeline must contain at least one frame")
        if arr.min() < 0:
            raise ValueError("class indices must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "frames", arr)

    def __len__(self) -> int:
        return int(self.frames.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrameTimeline):
            return NotImplemented
        return np.array_equal(self.frames, other.frames)

    def check_classes(self, num_classes: int) -> None:
        if int(self.frames.max()) >= num_classes:
            raise ValueError(
                f"timeline uses class index {int(self.frames.max())} "
                f"but only {num_classes} classes exist"
            )


class Segment(NamedTuple):
    """One maximal run of identically labeled frames."""

    label: int
    length: int


@dataclass(frozen=True)
class SegmentSequence:
    """Ordered maximal-run decomposition of a timeline.

    Invariants: segment lengths are >= 1 and sum to ``video_length``;
    adjacent segments carry distinct labels.
    """

    segments: tuple[Segment, ...]
    video_length: int

    def __post_init__(self):
        segs = tuple(Segment(int(l), int(n)) for l, n in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("segment sequence must contain at least one segment")
        if any(s.length < 1 for s in segs):
            raise ValueError("segment lengths must be >= 1")
        total = sum(s.length for s in segs)
        if total != self.video_length:
            raise ValueError(
                f"segment lengths sum to {total}, expected video_length={self.video_length}"
            )
        for a, b in zip(segs, segs[1:]):
            if a.label == b.label:
                raise ValueError(f"adjacent segments share label {a.label}; runs must be maximal")

    def __len__(self) -> int:
        return len(self.segments)

    def labels(self) -> tuple[int, ...]:
        return tuple(s.label for s in self.segments)


@dataclass(frozen=True)
class ObservationSplit:
    """Fraction of a video observed (alpha) and fraction scored (beta)."""

    observe_fraction: float
    predict_fraction: float

    def __post_init__(self):
        a, b = self.observe_fraction, self.predict_fraction
        if not 0.0 < a < 1.0:
            raise ValueError(f"observe fraction must lie in (0, 1), got {a}")
        if not 0.0 < b <= 1.0:
            raise ValueError(f"predict fraction must lie in (0, 1], got {b}")
        if a + b > 1.0 + 1e-12:
            raise ValueError(f"observe + predict fractions exceed 1: {a} + {b}")


def segments_from_frames(timeline: FrameTimeline) -> SegmentSequence:
    """Decompose a timeline into its maximal runs."""
    frames = timeline.frames
    boundaries = np.flatnonzero(np.diff(frames)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [frames.size]))
    segs = tuple(Segment(int(frames[s]), int(e - s)) for s, e in zip(starts, ends))
    return SegmentSequence(segs, int(frames.size))


def frames_from_segments(seq: SegmentSequence) -> FrameTimeline:
    """Expand segments back to one label per frame; exact inverse of
    :func:`segments_from_frames`."""
    labels = np.array([s.label for s in seq.segments], dtype=np.int64)
    lengths = np.array([s.length for s in seq.segments], dtype=np.int64)
    return FrameTimeline(np.repeat(labels, lengths))


def merge_adjacent(segments: list[Segment], video_length: int) -> SegmentSequence:
    """Build a SegmentSequence from raw runs, merging equal-label neighbors."""
    merged: list[Segment] = []
    for seg in segments:
        if merged and merged[-1].label == seg.label:
            merged[-1] = Segment(seg.label, merged[-1].length + seg.length)
        else:
            merged.append(seg)
    return SegmentSequence(tuple(merged), video_length)


def split_observation(timeline: FrameTimeline, alpha: float) -> tuple[FrameTimeline, FrameTimeline]:
    """Cut a timeline at ``floor(alpha * T)`` frames into (observed, future).

    Both parts must be non-empty; a segment crossing the cut is truncated
    on the observed side and continues on the future side.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"observation fraction must lie in (0, 1), got {alpha}")
    total = len(timeline)
    t = floor_frac(alpha, total)
    if t < 1:
        raise ValueError(f"observation fraction {alpha} yields an empty observed part (T={total})")
    if t >= total:
        raise ValueError(f"observation fraction {alpha} leaves no future frames (T={total})")
    return FrameTimeline(timeline.frames[:t]), FrameTimeline(timeline.frames[t:])


def truncate_future(timeline: FrameTimeline, beta: float, video_length: int) -> FrameTimeline:
    """First ``floor(beta * video_length)`` frames of a predicted timeline."""
    span = floor_frac(beta, video_length)
    if span < 1:
        raise ValueError(f"prediction fraction {beta} yields an empty span (T={video_length})")
    if len(timeline) < span:
        raise ValueError(
            f"prediction has {len(timeline)} frames but {span} are required "
            f"(beta={beta}, T={video_length})"
        )
    return FrameTimeline(timeline.frames[:span])
