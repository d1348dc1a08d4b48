import numpy as np
import pytest

from anticipate.timeline import (
    FrameTimeline,
    LabelVocabulary,
    ObservationSplit,
    Segment,
    SegmentSequence,
    floor_frac,
    frames_from_segments,
    merge_adjacent,
    round_half_up,
    segments_from_frames,
    split_observation,
    truncate_future,
)


def rle_oracle(frames):
    """Independent linear-scan run-length encoder."""
    runs = []
    for f in frames:
        if runs and runs[-1][0] == f:
            runs[-1][1] += 1
        else:
            runs.append([f, 1])
    return [(label, length) for label, length in runs]


def test_segments_single_frame():
    seq = segments_from_frames(FrameTimeline([0]))
    assert seq.segments == (Segment(0, 1),)
    assert seq.video_length == 1


def test_segments_basic_runs():
    seq = segments_from_frames(FrameTimeline([0, 0, 0, 1, 1]))
    assert seq.segments == (Segment(0, 3), Segment(1, 2))


def test_segments_repeated_class_non_adjacent():
    seq = segments_from_frames(FrameTimeline([0, 1, 0]))
    assert seq.segments == (Segment(0, 1), Segment(1, 1), Segment(0, 1))


def test_frames_from_segments_examples():
    assert frames_from_segments(SegmentSequence((Segment(0, 1),), 1)) == FrameTimeline([0])
    assert frames_from_segments(
        SegmentSequence((Segment(0, 3), Segment(1, 2)), 5)
    ) == FrameTimeline([0, 0, 0, 1, 1])
    assert frames_from_segments(
        SegmentSequence((Segment(1, 2), Segment(0, 1), Segment(1, 1)), 4)
    ) == FrameTimeline([1, 1, 0, 1])


def test_round_trip_random():
    rng = np.random.default_rng(7)
    for _ in range(300):
        frames = rng.integers(0, 5, size=rng.integers(1, 60))
        timeline = FrameTimeline(frames)
        seq = segments_from_frames(timeline)
        assert [(s.label, s.length) for s in seq.segments] == rle_oracle(frames.tolist())
        assert frames_from_segments(seq) == timeline
        # maximality: adjacent labels differ
        for a, b in zip(seq.segments, seq.segments[1:]):
            assert a.label != b.label


def test_split_observation_examples():
    timeline = FrameTimeline(np.arange(10) % 2)
    observed, future = split_observation(timeline, 0.2)
    assert len(observed) == 2 and len(future) == 8
    np.testing.assert_array_equal(
        np.concatenate([observed.frames, future.frames]), timeline.frames
    )
    # floor rule: t = floor(0.3 * 7) = 2
    observed, future = split_observation(FrameTimeline(np.zeros(7, dtype=int)), 0.3)
    assert len(observed) == 2


def test_split_concatenation_property():
    rng = np.random.default_rng(3)
    for _ in range(100):
        frames = rng.integers(0, 4, size=rng.integers(2, 80))
        timeline = FrameTimeline(frames)
        alpha = rng.uniform(0.05, 0.95)
        try:
            observed, future = split_observation(timeline, alpha)
        except ValueError:
            continue  # fraction yields an empty part for this length
        np.testing.assert_array_equal(
            np.concatenate([observed.frames, future.frames]), timeline.frames
        )


def test_observation_split_invariants():
    with pytest.raises(ValueError):
        ObservationSplit(0.95, 0.1)
    with pytest.raises(ValueError):
        ObservationSplit(0.0, 0.5)
    with pytest.raises(ValueError):
        ObservationSplit(0.2, 0.0)
    ObservationSplit(0.5, 0.5)  # boundary is allowed


def test_split_rejects_empty_parts():
    timeline = FrameTimeline([0, 1])
    with pytest.raises(ValueError):
        split_observation(timeline, 0.2)  # floor(0.4) = 0 observed frames
    with pytest.raises(ValueError):
        split_observation(FrameTimeline([0]), 0.9)


def test_truncate_future():
    pred = FrameTimeline(np.arange(50) % 3)
    assert len(truncate_future(pred, 0.1, 100)) == 10
    assert len(truncate_future(pred, 0.5, 100)) == 50
    with pytest.raises(ValueError):
        truncate_future(FrameTimeline(np.zeros(40, dtype=int)), 0.5, 100)


def test_floor_frac_float_guard():
    assert floor_frac(0.3, 10) == 3
    assert floor_frac(0.3, 7) == 2
    assert floor_frac(0.2, 10) == 2
    assert floor_frac(0.1, 30) == 3


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(2.49) == 2
    assert round_half_up(0.5) == 1
    assert round_half_up(0.49) == 0


def test_segment_sequence_invariants():
    with pytest.raises(ValueError):
        SegmentSequence((Segment(0, 2), Segment(1, 2)), 5)  # sum mismatch
    with pytest.raises(ValueError):
        SegmentSequence((Segment(0, 2), Segment(0, 2)), 4)  # adjacent same label
    with pytest.raises(ValueError):
        SegmentSequence((Segment(0, 0),), 0)  # zero length
    with pytest.raises(ValueError):
        SegmentSequence((), 0)


def test_merge_adjacent():
    seq = merge_adjacent([Segment(0, 2), Segment(0, 3), Segment(1, 1)], 6)
    assert seq.segments == (Segment(0, 5), Segment(1, 1))


def test_vocabulary():
    vocab = LabelVocabulary(("pour_milk", "stir"))
    assert len(vocab) == 2
    assert vocab.index_of("stir") == 1
    assert vocab.name_of(0) == "pour_milk"
    assert vocab.content_hash() == LabelVocabulary(("pour_milk", "stir")).content_hash()
    assert vocab.content_hash() != LabelVocabulary(("stir", "pour_milk")).content_hash()
    with pytest.raises(KeyError):
        vocab.index_of("missing")
    with pytest.raises(ValueError):
        LabelVocabulary(())
    with pytest.raises(ValueError):
        LabelVocabulary(("a", "a"))


def test_frame_timeline_immutable():
    timeline = FrameTimeline([0, 1, 2])
    with pytest.raises(ValueError):
        timeline.frames[0] = 5
    with pytest.raises(ValueError):
        FrameTimeline([])
    with pytest.raises(ValueError):
        FrameTimeline([-1])
