import numpy as np
import pytest

from anticipate.errors import DataFormatError
from anticipate.nn.checkpoint import MAGIC, load_checkpoint, save_checkpoint


def _params(seed=0):
    rng = np.random.default_rng(seed)
    return {"layer.w": rng.normal(size=(3, 4)), "layer.b": rng.normal(size=3)}


def test_round_trip(tmp_path):
    path = tmp_path / "model.ckpt"
    params = _params()
    save_checkpoint(path, "rnn-v1", {"hidden_size": 8}, "abc123", params)
    ckpt = load_checkpoint(path)
    assert ckpt.arch == "rnn-v1"
    assert ckpt.config == {"hidden_size": 8}
    assert ckpt.vocab_hash == "abc123"
    for name, value in params.items():
        np.testing.assert_array_equal(ckpt.params[name], value)
    ckpt.params["layer.w"][0, 0] = 99.0  # loaded arrays are writable copies


def test_byte_identical_saves(tmp_path):
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(a, "cnn-v1", {"rows": 16, "sigma": 3.0}, "h", _params(1))
    save_checkpoint(b, "cnn-v1", {"sigma": 3.0, "rows": 16}, "h", _params(1))
    assert a.read_bytes() == b.read_bytes()


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"not a checkpoint")
    with pytest.raises(DataFormatError, match="magic"):
        load_checkpoint(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, "rnn-v1", {}, "h", _params())
    blob = path.read_bytes()
    path.write_bytes(blob[:-16])
    with pytest.raises(DataFormatError, match="truncated"):
        load_checkpoint(path)


def test_trailing_garbage(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, "rnn-v1", {}, "h", _params())
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(DataFormatError, match="trailing"):
        load_checkpoint(path)


def test_magic_is_versioned():
    assert MAGIC.startswith(b"anticipate-checkpoint-v")
