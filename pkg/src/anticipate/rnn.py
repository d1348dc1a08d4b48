"""Recursive recurrent segment predictor.

Observed segments become a sequence of ``(normalized length, one-hot
label)`` tokens. A stack of two GRU layers (with dense layers at input
and output) predicts three quantities from the final hidden state: the
remaining length of the ongoing segment, the length of the next segment,
and the next segment's label. At inference the prediction is appended to
the input and the network is re-run until the requested horizon is
filled.

Lengths are expressed as ``scale * frames / video_length`` where
``scale`` is the average number of action segments per video in the
training data; this keeps the regression targets near unity.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConsistencyError, NumericalError, PredictionLimitError
from .nn import kernels
from .nn.adam import AdamState, adam_step
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.layers import dense_backward, dense_forward, glorot_uniform, relu, softmax
from .timeline import (
    FrameTimeline,
    Segment,
    SegmentSequence,
    merge_adjacent,
    round_half_up,
    segments_from_frames,
)

__all__ = [
    "RnnToken",
    "RnnTarget",
    "RnnPrediction",
    "RnnConfig",
    "RnnModel",
    "encode_tokens",
    "make_rnn_examples",
    "init_rnn_model",
    "rnn_forward",
    "rnn_loss",
    "rnn_loss_and_grads",
    "train_rnn",
    "rnn_predict_future",
    "save_rnn_model",
    "load_rnn_model",
    "RnnPredictor",
]

ARCH_TAG = "rnn-v1"
LOG_FLOOR = 1e-12

_GATE_NAMES = ("wz", "wr", "wh", "uz", "ur", "uh", "bz", "br", "bh")


@dataclass(frozen=True)
class RnnToken:
    """One observed segment: scaled length plus its class index.

    The class index is expanded to a one-hot vector when tokens are
    stacked into the network input.
    """

    normalized_length: float
    label: int


@dataclass(frozen=True)
class RnnTarget:
    """Training target: remaining length of the cut segment, partial
    length of the following segment, and the following segment's label.
    Lengths use the same normalization as the input tokens."""

    remaining_length: float
    next_length: float
    next_label: int

    def __post_init__(self):
        if self.remaining_length < 0:
            raise ValueError("remaining length must be >= 0")
        if self.next_length <= 0:
            raise ValueError("next length must be > 0")


@dataclass(frozen=True)
class RnnPrediction:
    remaining_length: float
    next_length: float
    class_probs: np.ndarray


@dataclass
class RnnConfig:
    num_classes: int
    hidden_size: int = 256
    learning_rate: float = 1e-3
    epochs: int = 20
    seed: int = 0
    # average segments per video; rescales length inputs/targets to ~1
    length_scale: float = 1.0


@dataclass
class RnnModel:
    config: RnnConfig
    params: dict[str, np.ndarray]
    vocab_hash: str = ""


def encode_tokens(observed: SegmentSequence, video_length: int, scale: float) -> list[RnnToken]:
    """Turn observed segments into input tokens.

    Token ``i`` carries ``scale * length_i / video_length`` and the
    segment's label.
    """
    if video_length < 1:
        raise ValueError("video_length must be >= 1")
    if scale <= 0:
        raise ValueError("scale must be positive")
    return [
        RnnToken(scale * seg.length / video_length, seg.label) for seg in observed.segments
    ]


def _tokens_to_array(tokens: list[RnnToken], num_classes: int) -> np.ndarray:
    x = np.zeros((len(tokens), 1 + num_classes))
    for i, tok in enumerate(tokens):
        if not 0 <= tok.label < num_classes:
            raise ValueError(f"token label {tok.label} outside vocabulary of {num_classes}")
        x[i, 0] = tok.normalized_length
        x[i, 1 + tok.label] = 1.0
    return x


def make_rnn_examples(
    gt: SegmentSequence,
    video_length: int,
    scale: float,
    rng: np.random.Generator,
) -> list[tuple[list[RnnToken], RnnTarget]]:
    """Cut a ground-truth segmentation into n-1 training examples.

    For each segment ``i < n`` a split point is drawn uniformly from the
    segment's interior; segments ``1..i`` (with ``i`` truncated at the
    split) form the input and the target is the triplet (frames of
    segment ``i`` after the split, frames of segment ``i+1`` up to a
    second interior split, label of segment ``i+1``). Length-1 segments
    have no interior, so their only cut keeps the single frame observed
    (remaining length 0) or takes the full frame as the next length.
    """
    segs = gt.segments
    examples = []
    for i in range(len(segs) - 1):
        cur, nxt = segs[i], segs[i + 1]
        cut = int(rng.integers(1, cur.length)) if cur.length >= 2 else 1
        next_cut = int(rng.integers(1, nxt.length)) if nxt.length >= 2 else 1
        tokens = [
            RnnToken(scale * s.length / video_length, s.label) for s in segs[:i]
        ]
        tokens.append(RnnToken(scale * cut / video_length, cur.label))
        target = RnnTarget(
            scale * (cur.length - cut) / video_length,
            scale * next_cut / video_length,
            nxt.label,
        )
        examples.append((tokens, target))
    return examples


def _param_shapes(config: RnnConfig) -> list[tuple[str, tuple[int, ...]]]:
    c, h = config.num_classes, config.hidden_size
    shapes: list[tuple[str, tuple[int, ...]]] = [("in.w", (h, 1 + c)), ("in.b", (h,))]
    for layer in ("gru1", "gru2"):
        for gate in ("wz", "wr", "wh"):
            shapes.append((f"{layer}.{gate}", (h, h)))
        for gate in ("uz", "ur", "uh"):
            shapes.append((f"{layer}.{gate}", (h, h)))
        for gate in ("bz", "br", "bh"):
            shapes.append((f"{layer}.{gate}", (h,)))
    shapes += [
        ("head_remaining.w", (1, h)),
        ("head_remaining.b", (1,)),
        ("head_next.w", (1, h)),
        ("head_next.b", (1,)),
        ("head_label.w", (c, h)),
        ("head_label.b", (c,)),
    ]
    return shapes


def init_rnn_model(config: RnnConfig, rng: np.random.Generator | None = None) -> RnnModel:
    if rng is None:
        rng = np.random.default_rng(config.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(config):
        if name.endswith(".b") or name.split(".")[-1].startswith("b"):
            params[name] = np.zeros(shape)
        else:
            params[name] = glorot_uniform(rng, shape)
    return RnnModel(config, params)


def _gru_args(params: dict[str, np.ndarray], layer: str):
    return tuple(params[f"{layer}.{g}"] for g in _GATE_NAMES)


def _forward_full(model: RnnModel, x: np.ndarray) -> dict:
    p = model.params
    h = model.config.hidden_size
    h_in = dense_forward(x, p["in.w"], p["in.b"])
    h0 = np.zeros(h)
    h1, z1, r1, hc1 = kernels.gru_layer_forward(h_in, h0, *_gru_args(p, "gru1"))
    h2, z2, r2, hc2 = kernels.gru_layer_forward(h1, h0, *_gru_args(p, "gru2"))
    h_last = h2[-1]
    a_rem = dense_forward(h_last, p["head_remaining.w"], p["head_remaining.b"])
    a_next = dense_forward(h_last, p["head_next.w"], p["head_next.b"])
    logits = dense_forward(h_last, p["head_label.w"], p["head_label.b"])
    return {
        "x": x, "h_in": h_in, "h0": h0,
        "h1": h1, "z1": z1, "r1": r1, "hc1": hc1,
        "h2": h2, "z2": z2, "r2": r2, "hc2": hc2,
        "a_rem": a_rem, "a_next": a_next, "logits": logits,
        "probs": softmax(logits),
    }


def rnn_forward(model: RnnModel, tokens: list[RnnToken]) -> RnnPrediction:
    """Run the network over a token sequence.

    Length heads pass through a rectifier so predicted lengths are never
    negative; the label head is a softmax distribution.
    """
    if not tokens:
        raise ValueError("token sequence must be non-empty")
    x = _tokens_to_array(tokens, model.config.num_classes)
    cache = _forward_full(model, x)
    return RnnPrediction(
        float(relu(cache["a_rem"])[0]),
        float(relu(cache["a_next"])[0]),
        cache["probs"],
    )


def rnn_loss(pred: RnnPrediction, target: RnnTarget) -> float:
    """Negative log-likelihood of the next label plus squared length errors."""
    p_c = max(float(pred.class_probs[target.next_label]), LOG_FLOOR)
    return (
        -math.log(p_c)
        + (target.remaining_length - pred.remaining_length) ** 2
        + (target.next_length - pred.next_length) ** 2
    )


def rnn_loss_and_grads(
    model: RnnModel, tokens: list[RnnToken], target: RnnTarget
) -> tuple[float, dict[str, np.ndarray]]:
    """Loss plus analytic gradients for every parameter block."""
    p = model.params
    x = _tokens_to_array(tokens, model.config.num_classes)
    cache = _forward_full(model, x)
    probs = cache["probs"]
    l_rem = float(relu(cache["a_rem"])[0])
    l_next = float(relu(cache["a_next"])[0])
    p_c = max(float(probs[target.next_label]), LOG_FLOOR)
    loss = (
        -math.log(p_c)
        + (target.remaining_length - l_rem) ** 2
        + (target.next_length - l_next) ** 2
    )

    grads: dict[str, np.ndarray] = {}
    d_logits = probs.copy()
    d_logits[target.next_label] -= 1.0
    d_arem = np.array([2.0 * (l_rem - target.remaining_length)]) * (cache["a_rem"] > 0)
    d_anext = np.array([2.0 * (l_next - target.next_length)]) * (cache["a_next"] > 0)

    h_last = cache["h2"][-1]
    dh_label, grads["head_label.w"], grads["head_label.b"] = dense_backward(
        h_last, p["head_label.w"], d_logits
    )
    dh_rem, grads["head_remaining.w"], grads["head_remaining.b"] = dense_backward(
        h_last, p["head_remaining.w"], d_arem
    )
    dh_next, grads["head_next.w"], grads["head_next.b"] = dense_backward(
        h_last, p["head_next.w"], d_anext
    )

    steps = x.shape[0]
    d_h2 = np.zeros((steps, model.config.hidden_size))
    d_h2[-1] = dh_label + dh_rem + dh_next

    d_h1, *gru2_grads = _gru_backward_into(p, "gru2", cache["h1"], cache, "2", d_h2)
    for gate, g in zip(_GATE_NAMES, gru2_grads):
        grads[f"gru2.{gate}"] = g
    d_hin, *gru1_grads = _gru_backward_into(p, "gru1", cache["h_in"], cache, "1", d_h1)
    for gate, g in zip(_GATE_NAMES, gru1_grads):
        grads[f"gru1.{gate}"] = g

    _, grads["in.w"], grads["in.b"] = dense_backward(x, p["in.w"], d_hin)
    return loss, grads


def _gru_backward_into(params, layer, layer_input, cache, suffix, d_h):
    out = kernels.gru_layer_backward(
        layer_input,
        cache["h0"],
        *(params[f"{layer}.{g}"] for g in ("wz", "wr", "wh", "uz", "ur", "uh")),
        cache[f"h{suffix}"],
        cache[f"z{suffix}"],
        cache[f"r{suffix}"],
        cache[f"hc{suffix}"],
        d_h,
    )
    dx = out[0]
    dwz, dwr, dwh, duz, dur, duh, dbz, dbr, dbh = out[1:10]
    return dx, dwz, dwr, dwh, duz, dur, duh, dbz, dbr, dbh


def train_rnn(
    sequences: list[SegmentSequence],
    config: RnnConfig,
    vocab_hash: str = "",
) -> tuple[RnnModel, list[float]]:
    """Train on ground-truth segmentations; returns (model, loss curve).

    One parameter update per example, examples reshuffled and the random
    segment cuts redrawn every epoch, all driven by ``config.seed``.
    """
    usable = [s for s in sequences if len(s) >= 2]
    if not usable:
        raise ValueError("no training sequence has two or more segments")
    rng = np.random.default_rng(config.seed)
    model = init_rnn_model(config, rng)
    model.vocab_hash = vocab_hash
    state = AdamState.for_params(model.params, config.learning_rate)
    curve: list[float] = []
    for epoch in range(config.epochs):
        examples: list[tuple[list[RnnToken], RnnTarget]] = []
        for seq in usable:
            examples.extend(
                make_rnn_examples(seq, seq.video_length, config.length_scale, rng)
            )
        order = rng.permutation(len(examples))
        total = 0.0
        for idx in order:
            tokens, target = examples[idx]
            loss, grads = rnn_loss_and_grads(model, tokens, target)
            if not math.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss {loss} at epoch {epoch}, example {int(idx)}"
                )
            adam_step(model.params, grads, state)
            total += loss
        curve.append(total / len(examples))
    return model, curve


def rnn_predict_future(
    model: RnnModel,
    observed: SegmentSequence,
    video_length: int,
    horizon_frames: int,
    max_iterations: int | None = None,
) -> SegmentSequence:
    """Recursively predict the next ``horizon_frames`` frames.

    Each round extends the ongoing segment by the predicted remaining
    length (floored at zero frames) and appends the predicted next
    segment (floored at one frame, which guarantees progress), feeding
    the grown sequence back in until the horizon is covered. The final
    segment is truncated so the output totals exactly ``horizon_frames``.
    """
    if horizon_frames < 1:
        raise ValueError("horizon must be >= 1 frame")
    scale = model.config.length_scale
    denorm = video_length / scale
    cap = max_iterations if max_iterations is not None else max(1, math.ceil(4 * scale))
    segs = list(observed.segments)
    observed_frames = observed.video_length
    predicted = 0
    iterations = 0
    while predicted < horizon_frames:
        iterations += 1
        if iterations > cap:
            partial = _future_window(segs, observed_frames, predicted)
            raise PredictionLimitError(
                f"prediction did not reach {horizon_frames} frames within "
                f"{cap} iterations ({predicted} frames predicted)",
                partial=partial,
            )
        tokens = [
            RnnToken(scale * s.length / video_length, s.label) for s in segs
        ]
        pred = rnn_forward(model, tokens)
        extension = max(0, round_half_up(pred.remaining_length * denorm))
        if extension > 0:
            segs[-1] = Segment(segs[-1].label, segs[-1].length + extension)
            predicted += extension
        if predicted >= horizon_frames:
            break
        next_length = max(1, round_half_up(pred.next_length * denorm))
        next_label = int(np.argmax(pred.class_probs))
        if segs[-1].label == next_label:
            segs[-1] = Segment(next_label, segs[-1].length + next_length)
        else:
            segs.append(Segment(next_label, next_length))
        predicted += next_length
    return _future_window(segs, observed_frames, horizon_frames)


def _future_window(segs: list[Segment], start: int, length: int) -> SegmentSequence | None:
    if length < 1:
        return None
    full = merge_adjacent(segs, sum(s.length for s in segs))
    frames = np.repeat(
        [s.label for s in full.segments], [s.length for s in full.segments]
    )[start : start + length]
    return segments_from_frames(FrameTimeline(frames))


def save_rnn_model(path, model: RnnModel) -> None:
    save_checkpoint(path, ARCH_TAG, asdict(model.config), model.vocab_hash, model.params)


def load_rnn_model(path) -> RnnModel:
    ckpt = load_checkpoint(path)
    if ckpt.arch != ARCH_TAG:
        raise ConsistencyError(f"checkpoint architecture {ckpt.arch!r} is not {ARCH_TAG!r}")
    config = RnnConfig(**ckpt.config)
    expected = dict(_param_shapes(config))
    for name, shape in expected.items():
        if name not in ckpt.params or ckpt.params[name].shape != shape:
            raise ConsistencyError(f"checkpoint parameter {name!r} missing or misshaped")
    return RnnModel(config, ckpt.params, ckpt.vocab_hash)


class RnnPredictor:
    """Adapter exposing the evaluation-harness predict interface."""

    name = "rnn"

    def __init__(self, model: RnnModel):
        self.model = model

    def predict(
        self, observed: FrameTimeline, video_length: int, horizon: int
    ) -> FrameTimeline:
        seq = segments_from_frames(observed)
        future = rnn_predict_future(self.model, seq, video_length, horizon)
        from .timeline import frames_from_segments

        return frames_from_segments(future)
