"""Training-free reference predictors: finite grammar and nearest neighbor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .timeline import FrameTimeline, SegmentSequence, round_half_up, segments_from_frames

__all__ = [
    "SequenceGrammar",
    "build_grammar",
    "grammar_predict",
    "nn_predict",
    "GrammarPredictor",
    "NearestNeighborPredictor",
]


@dataclass(frozen=True)
class SequenceGrammar:
    """Deduplicated training label sequences plus per-class mean lengths."""

    sequences: tuple[tuple[int, ...], ...]
    mean_lengths: Mapping[int, int]


def build_grammar(train: Sequence[SegmentSequence]) -> SequenceGrammar:
    """Collect the distinct label sequences seen in training and estimate
    each class's mean segment length (rounded, floored at one frame)."""
    if not train:
        raise ValueError("training set is empty")
    sequences = tuple(dict.fromkeys(seq.labels() for seq in train))
    sums: dict[int, int] = {}
    counts: dict[int, int] = {}
    for seq in train:
        for seg in seq.segments:
            sums[seg.label] = sums.get(seg.label, 0) + seg.length
            counts[seg.label] = counts.get(seg.label, 0) + 1
    means = {label: max(1, round_half_up(sums[label] / counts[label])) for label in sums}
    return SequenceGrammar(sequences, means)


def _common_prefix_length(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def grammar_predict(
    grammar: SequenceGrammar,
    observed: SegmentSequence,
    horizon_frames: int,
    rng: np.random.Generator,
) -> FrameTimeline:
    """Continue the observation along a randomly chosen grammar sequence.

    A sequence is drawn uniformly among those having the observed label
    sequence as a prefix (falling back to the sequences sharing the
    longest common prefix when none matches, which happens under noisy
    observations). The ongoing action is first completed to its mean
    length, then each not-yet-observed action of the chosen sequence is
    appended at its mean class length; leftover frames forward-fill the
    final label, and the result is truncated to the horizon.
    """
    if horizon_frames < 1:
        raise ValueError("horizon must be >= 1 frame")
    observed_labels = observed.labels()
    candidates = [
        s for s in grammar.sequences if s[: len(observed_labels)] == observed_labels
    ]
    if not candidates:
        best = max(_common_prefix_length(s, observed_labels) for s in grammar.sequences)
        candidates = [
            s for s in grammar.sequences if _common_prefix_length(s, observed_labels) == best
        ]
    chosen = candidates[int(rng.integers(len(candidates)))]

    last = observed.segments[-1]
    frames: list[int] = []
    remaining = grammar.mean_lengths.get(last.label, 1) - last.length
    frames.extend([last.label] * max(0, remaining))
    for label in chosen[len(observed_labels) :]:
        if len(frames) >= horizon_frames:
            break
        frames.extend([label] * grammar.mean_lengths.get(label, 1))
    fill = frames[-1] if frames else last.label
    while len(frames) < horizon_frames:
        frames.append(fill)
    return FrameTimeline(np.array(frames[:horizon_frames], dtype=np.int64))


def _resample_nearest(frames: np.ndarray, length: int) -> np.ndarray:
    """Nearest-index resampling to ``length`` samples (pixel-center rule)."""
    src = np.minimum(
        frames.size - 1,
        np.floor((np.arange(length) + 0.5) * frames.size / length).astype(np.int64),
    )
    return frames[src]


def nn_predict(
    train: Sequence[FrameTimeline],
    observed: FrameTimeline,
    horizon_frames: int,
    query_video_length: int,
) -> FrameTimeline:
    """Retrieve the training video whose matching observed portion has the
    lowest frame-wise error and return its continuation.

    Each training video's first ``alpha`` fraction (``alpha`` being the
    query's observed fraction of its own video) is resampled to the
    query's observed length; distance is the fraction of mismatching
    frames, ties resolving to the earliest training video. The winner's
    remainder is resampled to exactly ``horizon_frames``.
    """
    if not train:
        raise ValueError("training set is empty")
    if horizon_frames < 1:
        raise ValueError("horizon must be >= 1 frame")
    t_obs = len(observed)
    alpha = t_obs / query_video_length
    best_idx = 0
    best_distance = np.inf
    boundaries = []
    for idx, candidate in enumerate(train):
        total = len(candidate)
        boundary = min(max(1, int(np.floor(alpha * total + 1e-9))), total - 1)
        boundaries.append(boundary)
        resampled = _resample_nearest(candidate.frames[:boundary], t_obs)
        distance = float(np.mean(resampled != observed.frames))
        if distance < best_distance:
            best_distance = distance
            best_idx = idx
    winner = train[best_idx]
    future = winner.frames[boundaries[best_idx] :]
    return FrameTimeline(_resample_nearest(future, horizon_frames))


class GrammarPredictor:
    """Evaluation adapter; the random sequence pick is driven by ``seed``."""

    name = "grammar"

    def __init__(self, grammar: SequenceGrammar, seed: int = 0):
        self.grammar = grammar
        self._rng = np.random.default_rng(seed)

    def predict(
        self, observed: FrameTimeline, video_length: int, horizon: int
    ) -> FrameTimeline:
        return grammar_predict(self.grammar, segments_from_frames(observed), horizon, self._rng)


class NearestNeighborPredictor:
    name = "nn-baseline"

    def __init__(self, train: Sequence[FrameTimeline]):
        self.train = list(train)

    def predict(
        self, observed: FrameTimeline, video_length: int, horizon: int
    ) -> FrameTimeline:
        return nn_predict(self.train, observed, horizon, video_length)
