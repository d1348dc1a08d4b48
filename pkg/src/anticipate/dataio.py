"""Corpus loading, split files, and synthetic corpus generation.

File formats
------------
* Label file: one class name per line, one line per frame (UTF-8, LF or
  CRLF, a trailing blank line is tolerated). The file stem is the video id.
* Vocabulary file: one class name per line; line order defines the class
  indices.
* Split file: one *test* video id per line; the training set is the
  complement.
* Synthetic grammar spec: JSON, see :func:`load_synthetic_spec`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import json

import numpy as np

from .errors import ConsistencyError, DataFormatError
from .timeline import FrameTimeline, LabelVocabulary

__all__ = [
    "VideoRecord",
    "Corpus",
    "SplitSpec",
    "SequenceSpec",
    "SyntheticGrammarSpec",
    "load_vocabulary",
    "read_label_file",
    "write_label_file",
    "load_corpus",
    "save_corpus",
    "load_split",
    "load_synthetic_spec",
    "generate_synthetic",
]

LABEL_SUFFIX = ".txt"


@dataclass(frozen=True)
class VideoRecord:
    """Ground-truth labeling of one video plus an optional decoded labeling.

    The decoded timeline is an external recognizer's (possibly erroneous)
    output over the same frames; when present it must match the
    ground-truth length.
    """

    video_id: str
    ground_truth: FrameTimeline
    decoded: FrameTimeline | None = None

    def __post_init__(self):
        if self.decoded is not None and len(self.decoded) != len(self.ground_truth):
            raise ConsistencyError(
                f"video {self.video_id!r}: decoded timeline has {len(self.decoded)} frames, "
                f"ground truth has {len(self.ground_truth)}"
            )


@dataclass(frozen=True)
class Corpus:
    vocabulary: LabelVocabulary
    videos: tuple[VideoRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "videos", tuple(self.videos))
        ids = [v.video_id for v in self.videos]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate video ids in corpus: {dupes}")
        c = len(self.vocabulary)
        for v in self.videos:
            v.ground_truth.check_classes(c)
            if v.decoded is not None:
                v.decoded.check_classes(c)

    @cached_property
    def by_id(self) -> Mapping[str, VideoRecord]:
        return {v.video_id: v for v in self.videos}

    def __len__(self) -> int:
        return len(self.videos)


@dataclass(frozen=True)
class SplitSpec:
    """Disjoint train/test partition of a corpus by video id."""

    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "train_ids", tuple(self.train_ids))
        object.__setattr__(self, "test_ids", tuple(self.test_ids))
        if not self.train_ids:
            raise ValueError("split has an empty training set")
        if not self.test_ids:
            raise ValueError("split has an empty test set")
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"train and test sets overlap: {sorted(overlap)}")


def _read_lines(path: Path) -> list[str]:
    text = path.read_text(encoding="utf-8")
    lines = text.replace("\r\n", "\n").split("\n")
    # one trailing blank line (the conventional final newline) is fine
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def load_vocabulary(path: str | Path) -> LabelVocabulary:
    path = Path(path)
    names = [line.strip() for line in _read_lines(path)]
    if not names or any(not n for n in names):
        raise DataFormatError(f"{path}: vocabulary must be one non-empty class name per line")
    try:
        return LabelVocabulary(tuple(names))
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def read_label_file(path: str | Path, vocabulary: LabelVocabulary) -> FrameTimeline:
    """Parse one frame label per line into a timeline of class indices."""
    path = Path(path)
    lines = _read_lines(path)
    if not lines:
        raise DataFormatError(f"{path}: label file is empty")
    index = {name: i for i, name in enumerate(vocabulary.names)}
    frames = np.empty(len(lines), dtype=np.int64)
    for lineno, line in enumerate(lines, start=1):
        name = line.strip()
        try:
            frames[lineno - 1] = index[name]
        except KeyError:
            raise DataFormatError(f"{path}:{lineno}: unknown label {name!r}") from None
    return FrameTimeline(frames)


def write_label_file(path: str | Path, timeline: FrameTimeline, vocabulary: LabelVocabulary) -> None:
    path = Path(path)
    names = vocabulary.names
    path.write_text("".join(names[i] + "\n" for i in timeline.frames), encoding="utf-8")


def load_corpus(
    label_dir: str | Path,
    vocab_file: str | Path,
    decoded_dir: str | Path | None = None,
) -> Corpus:
    """Load all label files under ``label_dir`` (sorted by filename).

    When ``decoded_dir`` is given, a decoded timeline with the same
    filename is attached to its video; a missing decoded file simply
    leaves that video without one.
    """
    label_dir = Path(label_dir)
    vocabulary = load_vocabulary(vocab_file)
    label_files = sorted(label_dir.glob(f"*{LABEL_SUFFIX}"))
    if not label_files:
        raise DataFormatError(f"{label_dir}: no *{LABEL_SUFFIX} label files found")
    videos = []
    for label_path in label_files:
        gt = read_label_file(label_path, vocabulary)
        decoded = None
        if decoded_dir is not None:
            decoded_path = Path(decoded_dir) / label_path.name
            if decoded_path.exists():
                decoded = read_label_file(decoded_path, vocabulary)
        videos.append(VideoRecord(label_path.stem, gt, decoded))
    return Corpus(vocabulary, tuple(videos))


def save_corpus(out_dir: str | Path, corpus: Corpus) -> None:
    """Write a corpus to disk in the load_corpus layout.

    Produces ``vocab.txt``, ``labels/<id>.txt`` and, for videos that have
    one, ``decoded/<id>.txt``.
    """
    out_dir = Path(out_dir)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    (out_dir / "vocab.txt").write_text(
        "".join(n + "\n" for n in corpus.vocabulary.names), encoding="utf-8"
    )
    for video in corpus.videos:
        write_label_file(out_dir / "labels" / f"{video.video_id}{LABEL_SUFFIX}",
                         video.ground_truth, corpus.vocabulary)
        if video.decoded is not None:
            (out_dir / "decoded").mkdir(exist_ok=True)
            write_label_file(out_dir / "decoded" / f"{video.video_id}{LABEL_SUFFIX}",
                             video.decoded, corpus.vocabulary)


def load_split(split_file: str | Path, corpus: Corpus) -> SplitSpec:
    """Read test video ids (one per line); train ids are the complement."""
    split_file = Path(split_file)
    test_ids = [line.strip() for line in _read_lines(split_file) if line.strip()]
    if not test_ids:
        raise DataFormatError(f"{split_file}: split file lists no test videos")
    known = corpus.by_id
    for vid in test_ids:
        if vid not in known:
            raise DataFormatError(f"{split_file}: unknown video id {vid!r}")
    test_set = set(test_ids)
    train_ids = tuple(v.video_id for v in corpus.videos if v.video_id not in test_set)
    if not train_ids:
        raise DataFormatError(f"{split_file}: split leaves an empty training set")
    return SplitSpec(train_ids, tuple(dict.fromkeys(test_ids)))


@dataclass(frozen=True)
class SequenceSpec:
    """One allowed label sequence with its selection weight."""

    labels: tuple[str, ...]
    weight: float = 1.0


@dataclass(frozen=True)
class SyntheticGrammarSpec:
    """Stochastic activity grammar for generating desk-scale corpora.

    Each video picks a label sequence (weighted choice) and draws every
    segment's length uniformly from that class's ``[min, max]`` frame
    range. Weights may be zero (the sequence is never picked) but must
    not all be zero.
    """

    vocabulary: LabelVocabulary
    sequences: tuple[SequenceSpec, ...]
    lengths: Mapping[str, tuple[int, int]]
    video_count: int
    seed: int = 0
    id_prefix: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))
        if not self.sequences:
            raise ValueError("grammar spec needs at least one sequence")
        weights = [s.weight for s in self.sequences]
        if any(w < 0 for w in weights):
            raise ValueError("sequence weights must be non-negative")
        if sum(weights) <= 0:
            raise ValueError("at least one sequence weight must be positive")
        names = set(self.vocabulary.names)
        for seq in self.sequences:
            if not seq.labels:
                raise ValueError("sequences must be non-empty")
            for a, b in zip(seq.labels, seq.labels[1:]):
                if a == b:
                    raise ValueError(f"sequence {seq.labels} repeats {a!r} adjacently")
            for label in seq.labels:
                if label not in names:
                    raise ValueError(f"sequence label {label!r} not in vocabulary")
                if label not in self.lengths:
                    raise ValueError(f"no length range for class {label!r}")
        for name, (lo, hi) in self.lengths.items():
            if lo < 1 or lo > hi:
                raise ValueError(f"class {name!r}: invalid length range [{lo}, {hi}]")
        if self.video_count < 1:
            raise ValueError("video_count must be >= 1")


def load_synthetic_spec(path: str | Path) -> SyntheticGrammarSpec:
    """Parse a JSON grammar spec.

    Schema::

        {
          "vocabulary": ["take_bowl", "pour_milk", ...],
          "sequences": [{"labels": ["take_bowl", "pour_milk"], "weight": 1.0}, ...],
          "lengths": {"take_bowl": [5, 12], "pour_milk": [8, 8], ...},
          "video_count": 100,
          "seed": 7
        }
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        vocabulary = LabelVocabulary(tuple(raw["vocabulary"]))
        sequences = tuple(
            SequenceSpec(tuple(s["labels"]), float(s.get("weight", 1.0)))
            for s in raw["sequences"]
        )
        lengths = {k: (int(lo), int(hi)) for k, (lo, hi) in raw["lengths"].items()}
        spec = SyntheticGrammarSpec(
            vocabulary=vocabulary,
            sequences=sequences,
            lengths=lengths,
            video_count=int(raw["video_count"]),
            seed=int(raw.get("seed", 0)),
            id_prefix=str(raw.get("id_prefix", "synthetic")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: bad grammar spec: {exc}") from exc
    return spec


def generate_synthetic(spec: SyntheticGrammarSpec) -> Corpus:
    """Draw a corpus from the grammar; bit-reproducible for a fixed seed."""
    rng = np.random.default_rng(spec.seed)
    weights = np.array([s.weight for s in spec.sequences], dtype=np.float64)
    probs = weights / weights.sum()
    label_index = {name: i for i, name in enumerate(spec.vocabulary.names)}
    videos = []
    width = max(4, len(str(spec.video_count - 1)))
    for i in range(spec.video_count):
        seq = spec.sequences[int(rng.choice(len(spec.sequences), p=probs))]
        parts = []
        for name in seq.labels:
            lo, hi = spec.lengths[name]
            length = int(rng.integers(lo, hi + 1))
            parts.append(np.full(length, label_index[name], dtype=np.int64))
        timeline = FrameTimeline(np.concatenate(parts))
        videos.append(VideoRecord(f"{spec.id_prefix}_{i:0{width}d}", timeline))
    return Corpus(spec.vocabulary, tuple(videos))
