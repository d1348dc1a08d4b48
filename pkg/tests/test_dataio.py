import json

import numpy as np
import pytest

from anticipate.dataio import (
    Corpus,
    SequenceSpec,
    SyntheticGrammarSpec,
    VideoRecord,
    generate_synthetic,
    load_corpus,
    load_split,
    load_synthetic_spec,
    load_vocabulary,
    read_label_file,
    save_corpus,
    write_label_file,
)
from anticipate.errors import ConsistencyError, DataFormatError
from anticipate.timeline import FrameTimeline, LabelVocabulary


@pytest.fixture
def vocab(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("pour_milk\nstir\n")
    return load_vocabulary(path)


def test_label_file_parse(tmp_path, vocab):
    path = tmp_path / "v1.txt"
    path.write_text("pour_milk\npour_milk\nstir\n")
    assert read_label_file(path, vocab) == FrameTimeline([0, 0, 1])


def test_label_file_crlf_and_trailing_blank(tmp_path, vocab):
    path = tmp_path / "v1.txt"
    path.write_bytes(b"pour_milk\r\nstir\r\n\r\n"[:-2])  # CRLF, final newline
    assert read_label_file(path, vocab) == FrameTimeline([0, 1])


def test_label_file_empty(tmp_path, vocab):
    path = tmp_path / "v1.txt"
    path.write_text("")
    with pytest.raises(DataFormatError):
        read_label_file(path, vocab)


def test_label_file_unknown_label_names_location(tmp_path, vocab):
    path = tmp_path / "v1.txt"
    path.write_text("pour_milk\nchop\n")
    with pytest.raises(DataFormatError, match=r"v1\.txt:2.*chop"):
        read_label_file(path, vocab)


def _make_corpus_dir(tmp_path, decoded_lines=None):
    labels = tmp_path / "labels"
    labels.mkdir()
    (tmp_path / "vocab.txt").write_text("pour_milk\nstir\n")
    (labels / "v1.txt").write_text("pour_milk\npour_milk\nstir\nstir\nstir\nstir\n")
    (labels / "v2.txt").write_text("stir\nstir\npour_milk\npour_milk\n")
    if decoded_lines is not None:
        decoded = tmp_path / "decoded"
        decoded.mkdir()
        (decoded / "v1.txt").write_text(decoded_lines)
    return tmp_path


def test_load_corpus(tmp_path):
    root = _make_corpus_dir(tmp_path)
    corpus = load_corpus(root / "labels", root / "vocab.txt")
    assert len(corpus) == 2
    assert corpus.by_id["v1"].ground_truth == FrameTimeline([0, 0, 1, 1, 1, 1])
    assert corpus.by_id["v1"].decoded is None


def test_load_corpus_with_decoded(tmp_path):
    root = _make_corpus_dir(tmp_path, "stir\npour_milk\nstir\nstir\nstir\nstir\n")
    corpus = load_corpus(root / "labels", root / "vocab.txt", root / "decoded")
    assert corpus.by_id["v1"].decoded == FrameTimeline([1, 0, 1, 1, 1, 1])
    assert corpus.by_id["v2"].decoded is None  # no matching file


def test_decoded_length_mismatch(tmp_path):
    root = _make_corpus_dir(tmp_path, "stir\nstir\nstir\nstir\nstir\n")  # 5 lines vs 6
    with pytest.raises(ConsistencyError):
        load_corpus(root / "labels", root / "vocab.txt", root / "decoded")


def test_parse_serialize_parse_identity(tmp_path):
    vocab = LabelVocabulary(("a", "b", "c"))
    rng = np.random.default_rng(0)
    videos = tuple(
        VideoRecord(f"v{i}", FrameTimeline(rng.integers(0, 3, size=rng.integers(1, 30))))
        for i in range(5)
    )
    corpus = Corpus(vocab, videos)
    save_corpus(tmp_path, corpus)
    reloaded = load_corpus(tmp_path / "labels", tmp_path / "vocab.txt")
    assert reloaded.vocabulary == vocab
    for video in videos:
        assert reloaded.by_id[video.video_id].ground_truth == video.ground_truth
    # serialize again: byte-identical files
    out2 = tmp_path / "again"
    save_corpus(out2, reloaded)
    for f in (tmp_path / "labels").iterdir():
        assert (out2 / "labels" / f.name).read_bytes() == f.read_bytes()


def test_write_label_file_round_trip(tmp_path):
    vocab = LabelVocabulary(("a", "b"))
    timeline = FrameTimeline([0, 1, 1, 0])
    write_label_file(tmp_path / "x.txt", timeline, vocab)
    assert read_label_file(tmp_path / "x.txt", vocab) == timeline


def test_load_split(tmp_path):
    root = _make_corpus_dir(tmp_path)
    corpus = load_corpus(root / "labels", root / "vocab.txt")
    split_file = tmp_path / "split.txt"
    split_file.write_text("v2\n")
    split = load_split(split_file, corpus)
    assert split.train_ids == ("v1",)
    assert split.test_ids == ("v2",)

    split_file.write_text("v1\nv2\n")
    with pytest.raises(DataFormatError, match="empty training"):
        load_split(split_file, corpus)

    split_file.write_text("vX\n")
    with pytest.raises(DataFormatError, match="vX"):
        load_split(split_file, corpus)


def _toy_spec(**overrides):
    vocab = LabelVocabulary(("a", "b", "c"))
    args = dict(
        vocabulary=vocab,
        sequences=(SequenceSpec(("a", "b"), 1.0),),
        lengths={"a": (3, 3), "b": (3, 3), "c": (2, 4)},
        video_count=1,
        seed=11,
    )
    args.update(overrides)
    return SyntheticGrammarSpec(**args)


def test_generate_degenerate_lengths():
    corpus = generate_synthetic(_toy_spec())
    assert corpus.videos[0].ground_truth == FrameTimeline([0, 0, 0, 1, 1, 1])


def test_generate_deterministic():
    spec = _toy_spec(
        sequences=(SequenceSpec(("a", "b"), 1.0), SequenceSpec(("b", "c", "a"), 2.0)),
        video_count=20,
    )
    c1 = generate_synthetic(spec)
    c2 = generate_synthetic(spec)
    for v1, v2 in zip(c1.videos, c2.videos):
        assert v1.video_id == v2.video_id
        assert v1.ground_truth == v2.ground_truth


def test_generate_weight_zero_never_picked():
    spec = _toy_spec(
        sequences=(SequenceSpec(("a", "b"), 1.0), SequenceSpec(("b", "c"), 0.0)),
        video_count=50,
    )
    corpus = generate_synthetic(spec)
    for video in corpus.videos:
        assert video.ground_truth.frames[0] == 0  # always starts with 'a'


def test_generated_sequences_come_from_spec():
    spec = _toy_spec(
        sequences=(SequenceSpec(("a", "b"), 1.0), SequenceSpec(("b", "c", "a"), 1.0)),
        lengths={"a": (2, 5), "b": (1, 4), "c": (3, 6)},
        video_count=40,
    )
    allowed = {("a", "b"), ("b", "c", "a")}
    from anticipate.timeline import segments_from_frames

    corpus = generate_synthetic(spec)
    names = spec.vocabulary.names
    for video in corpus.videos:
        labels = tuple(
            names[s.label] for s in segments_from_frames(video.ground_truth).segments
        )
        assert labels in allowed


def test_spec_validation():
    with pytest.raises(ValueError):
        _toy_spec(sequences=(SequenceSpec(("a", "a"), 1.0),))  # adjacent repeat
    with pytest.raises(ValueError):
        _toy_spec(sequences=(SequenceSpec(("a", "b"), 0.0),))  # all weights zero
    with pytest.raises(ValueError):
        _toy_spec(sequences=(SequenceSpec(("a", "b"), -1.0),))
    with pytest.raises(ValueError):
        _toy_spec(lengths={"a": (0, 3), "b": (3, 3), "c": (2, 4)})
    with pytest.raises(ValueError):
        _toy_spec(lengths={"a": (5, 3), "b": (3, 3), "c": (2, 4)})
    with pytest.raises(ValueError):
        _toy_spec(sequences=(SequenceSpec(("a", "z"), 1.0),))  # unknown label


def test_load_synthetic_spec(tmp_path):
    raw = {
        "vocabulary": ["a", "b"],
        "sequences": [{"labels": ["a", "b"], "weight": 2.0}, {"labels": ["b", "a"]}],
        "lengths": {"a": [2, 4], "b": [3, 3]},
        "video_count": 7,
        "seed": 5,
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(raw))
    spec = load_synthetic_spec(path)
    assert spec.video_count == 7
    assert spec.sequences[1].weight == 1.0
    assert spec.lengths["a"] == (2, 4)
    corpus = generate_synthetic(spec)
    assert len(corpus) == 7

    path.write_text("{not json")
    with pytest.raises(DataFormatError):
        load_synthetic_spec(path)
    path.write_text(json.dumps({"vocabulary": ["a"]}))
    with pytest.raises(DataFormatError):
        load_synthetic_spec(path)
