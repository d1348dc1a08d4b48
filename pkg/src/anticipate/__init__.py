"""Forecast the future frame-wise activity labels of a partially observed video.

Given the label timeline of a video prefix, the package predicts which
activities follow, in what order, and for how long, over horizons of
minutes: a recursive recurrent segment predictor, a one-shot
convolutional matrix predictor, and grammar / nearest-neighbor
baselines, plus the evaluation harness that scores them.
"""

__version__ = "0.1.0"

from .timeline import (
    FrameTimeline,
    LabelVocabulary,
    ObservationSplit,
    Segment,
    SegmentSequence,
    frames_from_segments,
    segments_from_frames,
    split_observation,
    truncate_future,
)

__all__ = [
    "__version__",
    "FrameTimeline",
    "LabelVocabulary",
    "ObservationSplit",
    "Segment",
    "SegmentSequence",
    "frames_from_segments",
    "segments_from_frames",
    "split_observation",
    "truncate_future",
]
