"""One-shot convolutional matrix predictor.

The observed segments are encoded into an ``S x C`` binary matrix whose
rows represent equal slices of observed time: segment ``k`` of length
``l_k`` owns ``floor(l_k / t * S)`` rows (plus leftover rows by largest
fractional remainder), each one-hot at the segment's label column. Two
convolution + pooling stages and two dense layers map this matrix to a
real-valued ``S x C`` output covering the *following* half of the video
in one pass. Rows are either L2-normalized (squared-error training) or
softmaxed (cross-entropy training); at inference a temporal Gaussian
filter smooths each column before the per-row argmax is expanded back
into frames.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConsistencyError, NumericalError
from .nn import kernels
from .nn.adam import AdamState, adam_step
from .nn.checkpoint import load_checkpoint, save_checkpoint
from .nn.layers import (
    dense_backward,
    dense_forward,
    gaussian_filter_columns,
    glorot_uniform,
    l2_normalize_rows,
    l2_normalize_rows_backward,
    maxpool_rows,
    maxpool_rows_backward,
    relu,
    relu_backward,
    softmax,
)
from .timeline import FrameTimeline, SegmentSequence, floor_frac, round_half_up, segments_from_frames

__all__ = [
    "CnnConfig",
    "CnnModel",
    "breakfast_config",
    "salads_config",
    "default_hidden_width",
    "encode_matrix",
    "decode_matrix",
    "make_cnn_examples",
    "cnn_forward",
    "cnn_loss",
    "cnn_loss_and_grads",
    "smooth_output",
    "train_cnn",
    "cnn_predict_future",
    "count_parameters",
    "save_cnn_model",
    "load_cnn_model",
    "dump_matrix_csv",
    "CnnPredictor",
]

ARCH_TAG = "cnn-v1"
KERNEL_WIDTH = 5
LOG_FLOOR = 1e-12

LOSS_SQUARED = "squared"
LOSS_XENT = "xent"

# training observation fractions; the target is always the following half
TRAIN_OBSERVE_FRACTIONS = (0.1, 0.2, 0.3, 0.5)


def default_hidden_width(rows: int, num_classes: int) -> int:
    """Dense hidden width scaled from the 128x48 reference configuration
    (which lands near six million parameters overall)."""
    return max(16, round_half_up(900.0 * (rows * num_classes) / (128 * 48)))


@dataclass
class CnnConfig:
    rows: int
    num_classes: int
    conv1_maps: int = 8
    conv2_maps: int = 16
    hidden_width: int | None = None
    sigma: float = 3.0
    loss_mode: str = LOSS_SQUARED
    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1:
            raise ValueError("rows must be >= 1")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.loss_mode not in (LOSS_SQUARED, LOSS_XENT):
            raise ValueError(f"loss_mode must be {LOSS_SQUARED!r} or {LOSS_XENT!r}")
        if self.hidden_width is None:
            self.hidden_width = default_hidden_width(self.rows, self.num_classes)

    @property
    def pooled_rows(self) -> int:
        """Row count after the two stride-2 poolings."""
        return math.ceil(math.ceil(self.rows / 2) / 2)


def breakfast_config(**overrides) -> CnnConfig:
    """Defaults tuned for the Breakfast dataset (48 classes)."""
    args = dict(rows=128, num_classes=48, sigma=3.0)
    args.update(overrides)
    return CnnConfig(**args)


def salads_config(**overrides) -> CnnConfig:
    """Defaults tuned for 50Salads (17 classes, ~4x longer videos)."""
    args = dict(rows=512, num_classes=17, sigma=13.0)
    args.update(overrides)
    return CnnConfig(**args)


@dataclass
class CnnModel:
    config: CnnConfig
    params: dict[str, np.ndarray]
    vocab_hash: str = ""


def encode_matrix(observed: SegmentSequence, rows: int, num_classes: int) -> np.ndarray:
    """Encode observed segments as an ``(rows, num_classes)`` one-hot matrix.

    Row allocation: segment ``k`` gets ``floor(l_k / t * rows)`` base rows;
    the leftover rows go one each to the largest fractional remainders
    (earlier segment wins ties); every segment always keeps at least one
    row, taking from the largest allocation if necessary.
    """
    segs = observed.segments
    if len(segs) > rows:
        raise ValueError(f"{len(segs)} observed segments exceed the {rows} matrix rows")
    t = observed.video_length
    # integer arithmetic: l * rows = base * t + rem, so comparing `rem`
    # compares fractional remainders exactly
    alloc = [(s.length * rows) // t for s in segs]
    rems = [(s.length * rows) % t for s in segs]
    leftover = rows - sum(alloc)
    for k in sorted(range(len(segs)), key=lambda k: (-rems[k], k))[:leftover]:
        alloc[k] += 1
    while any(a == 0 for a in alloc):
        donor = max(range(len(alloc)), key=lambda k: (alloc[k], -k))
        alloc[donor] -= 1
        alloc[alloc.index(0)] += 1
    matrix = np.zeros((rows, num_classes))
    row = 0
    for seg, count in zip(segs, alloc):
        matrix[row : row + count, seg.label] = 1.0
        row += count
    return matrix


def decode_matrix(y: np.ndarray, horizon_frames: int) -> FrameTimeline:
    """Expand per-row argmax labels into exactly ``horizon_frames`` frames.

    Each row covers ``floor(horizon / S)`` frames; the remainder extends
    the final row's label. Argmax ties resolve to the lowest class index.
    """
    if horizon_frames < 1:
        raise ValueError("horizon must be >= 1 frame")
    labels = np.argmax(y, axis=1)
    per_row = horizon_frames // y.shape[0]
    remainder = horizon_frames - per_row * y.shape[0]
    frames = np.concatenate(
        (np.repeat(labels, per_row), np.full(remainder, labels[-1], dtype=labels.dtype))
    )
    return FrameTimeline(frames)


def make_cnn_examples(
    gt_timeline: FrameTimeline, rows: int, num_classes: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Four (input, target) matrix pairs per video.

    Observation fractions 10/20/30/50 percent, each paired with the
    following 50 percent of the video as the target.
    """
    total = len(gt_timeline)
    half = floor_frac(0.5, total)
    pairs = []
    for fraction in TRAIN_OBSERVE_FRACTIONS:
        t = floor_frac(fraction, total)
        if t < 1 or half < 1:
            raise ValueError(
                f"video of {total} frames is too short for a {fraction:.0%} observation"
            )
        observed = segments_from_frames(FrameTimeline(gt_timeline.frames[:t]))
        future = segments_from_frames(FrameTimeline(gt_timeline.frames[t : t + half]))
        pairs.append(
            (encode_matrix(observed, rows, num_classes), encode_matrix(future, rows, num_classes))
        )
    return pairs


def _param_shapes(config: CnnConfig) -> list[tuple[str, tuple[int, ...]]]:
    s, c = config.rows, config.num_classes
    flat = config.pooled_rows * config.conv2_maps
    return [
        ("conv1.w", (config.conv1_maps, c, KERNEL_WIDTH)),
        ("conv1.b", (config.conv1_maps,)),
        ("conv2.w", (config.conv2_maps, config.conv1_maps, KERNEL_WIDTH)),
        ("conv2.b", (config.conv2_maps,)),
        ("fc1.w", (config.hidden_width, flat)),
        ("fc1.b", (config.hidden_width,)),
        ("fc2.w", (s * c, config.hidden_width)),
        ("fc2.b", (s * c,)),
    ]


def init_cnn_model(config: CnnConfig, rng: np.random.Generator | None = None) -> CnnModel:
    if rng is None:
        rng = np.random.default_rng(config.seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_shapes(config):
        params[name] = np.zeros(shape) if name.endswith(".b") else glorot_uniform(rng, shape)
    return CnnModel(config, params)


def count_parameters(model: CnnModel) -> int:
    return sum(p.size for p in model.params.values())


def _forward_full(model: CnnModel, x: np.ndarray) -> dict:
    p = model.params
    cfg = model.config
    if x.shape != (cfg.rows, cfg.num_classes):
        raise ValueError(f"input shape {x.shape} != ({cfg.rows}, {cfg.num_classes})")
    a1 = kernels.conv1d_forward(x, p["conv1.w"], p["conv1.b"])
    z1 = relu(a1)
    p1 = maxpool_rows(z1)
    a2 = kernels.conv1d_forward(p1, p["conv2.w"], p["conv2.b"])
    z2 = relu(a2)
    p2 = maxpool_rows(z2)
    flat = p2.reshape(-1)
    a3 = dense_forward(flat, p["fc1.w"], p["fc1.b"])
    g = relu(a3)
    out = dense_forward(g, p["fc2.w"], p["fc2.b"]).reshape(cfg.rows, cfg.num_classes)
    y = l2_normalize_rows(out) if cfg.loss_mode == LOSS_SQUARED else softmax(out)
    return {
        "x": x, "a1": a1, "z1": z1, "p1": p1, "a2": a2, "z2": z2, "p2": p2,
        "flat": flat, "a3": a3, "g": g, "out": out, "y": y,
    }


def cnn_forward(model: CnnModel, x: np.ndarray) -> np.ndarray:
    """Map an encoded observation matrix to the predicted future matrix.

    Rows of the result are unit-L2 vectors in squared-error mode (all-zero
    rows stay zero) or probability rows in cross-entropy mode.
    """
    return _forward_full(model, x)["y"]


def cnn_loss(prediction: np.ndarray, target: np.ndarray, mode: str = LOSS_SQUARED) -> float:
    """Mean squared error over all matrix entries, or mean per-row
    cross-entropy against the target rows' one-hot labels."""
    if prediction.shape != target.shape:
        raise ValueError(f"shape mismatch: {prediction.shape} vs {target.shape}")
    if mode == LOSS_SQUARED:
        return float(np.mean((target - prediction) ** 2))
    if mode == LOSS_XENT:
        labels = np.argmax(target, axis=1)
        picked = prediction[np.arange(prediction.shape[0]), labels]
        return float(-np.mean(np.log(np.maximum(picked, LOG_FLOOR))))
    raise ValueError(f"unknown loss mode {mode!r}")


def cnn_loss_and_grads(
    model: CnnModel, x: np.ndarray, target: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    p = model.params
    cfg = model.config
    cache = _forward_full(model, x)
    y = cache["y"]
    loss = cnn_loss(y, target, cfg.loss_mode)
    if cfg.loss_mode == LOSS_SQUARED:
        d_y = 2.0 * (y - target) / y.size
        d_out = l2_normalize_rows_backward(cache["out"], d_y)
    else:
        # softmax rows + cross-entropy collapse to (y - target) / S
        d_out = (y - target) / y.shape[0]

    grads: dict[str, np.ndarray] = {}
    d_g, grads["fc2.w"], grads["fc2.b"] = dense_backward(cache["g"], p["fc2.w"], d_out.reshape(-1))
    d_a3 = relu_backward(cache["a3"], d_g)
    d_flat, grads["fc1.w"], grads["fc1.b"] = dense_backward(cache["flat"], p["fc1.w"], d_a3)
    d_p2 = d_flat.reshape(cache["p2"].shape)
    d_z2 = maxpool_rows_backward(cache["z2"], d_p2)
    d_a2 = relu_backward(cache["a2"], d_z2)
    d_p1, grads["conv2.w"], grads["conv2.b"] = kernels.conv1d_backward(
        cache["p1"], p["conv2.w"], d_a2
    )
    d_z1 = maxpool_rows_backward(cache["z1"], d_p1)
    d_a1 = relu_backward(cache["a1"], d_z1)
    _, grads["conv1.w"], grads["conv1.b"] = kernels.conv1d_backward(
        cache["x"], p["conv1.w"], d_a1, need_dx=False
    )
    return loss, grads


def smooth_output(y: np.ndarray, sigma: float) -> np.ndarray:
    """Temporal smoothing along each column; inference-time only, applied
    after row normalization and before the argmax decode."""
    return gaussian_filter_columns(y, sigma)


def train_cnn(
    timelines: list[FrameTimeline],
    config: CnnConfig,
    vocab_hash: str = "",
) -> tuple[CnnModel, list[float]]:
    """Mini-batch training over the per-video example pairs.

    Deterministic for a fixed seed; raises on non-finite loss.
    """
    if not timelines:
        raise ValueError("training set is empty")
    examples: list[tuple[np.ndarray, np.ndarray]] = []
    for tl in timelines:
        examples.extend(make_cnn_examples(tl, config.rows, config.num_classes))
    rng = np.random.default_rng(config.seed)
    model = init_cnn_model(config, rng)
    model.vocab_hash = vocab_hash
    state = AdamState.for_params(model.params, config.learning_rate)
    curve: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(examples))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_grads: dict[str, np.ndarray] | None = None
            batch_loss = 0.0
            for idx in batch:
                x, target = examples[idx]
                loss, grads = cnn_loss_and_grads(model, x, target)
                if not math.isfinite(loss):
                    raise NumericalError(
                        f"non-finite loss {loss} at epoch {epoch}, example {int(idx)}"
                    )
                batch_loss += loss
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for name, g in grads.items():
                        batch_grads[name] += g
            assert batch_grads is not None
            for name in batch_grads:
                batch_grads[name] /= len(batch)
            adam_step(model.params, batch_grads, state)
            epoch_loss += batch_loss
        curve.append(epoch_loss / len(examples))
    return model, curve


def cnn_predict_future(
    model: CnnModel,
    observed: SegmentSequence,
    requested_frames: int,
    full_half_frames: int,
) -> FrameTimeline:
    """Predict the following-half span and return its first
    ``requested_frames`` frames.

    The network always predicts the half-video span it was trained for
    (``full_half_frames``); shorter evaluation spans take the prefix.
    """
    if requested_frames < 1:
        raise ValueError("requested span must be >= 1 frame")
    if requested_frames > full_half_frames:
        raise ConsistencyError(
            f"requested {requested_frames} frames exceed the trained "
            f"half-video horizon of {full_half_frames}"
        )
    x = encode_matrix(observed, model.config.rows, model.config.num_classes)
    y = smooth_output(cnn_forward(model, x), model.config.sigma)
    decoded = decode_matrix(y, full_half_frames)
    return FrameTimeline(decoded.frames[:requested_frames])


def save_cnn_model(path, model: CnnModel) -> None:
    save_checkpoint(path, ARCH_TAG, asdict(model.config), model.vocab_hash, model.params)


def load_cnn_model(path) -> CnnModel:
    ckpt = load_checkpoint(path)
    if ckpt.arch != ARCH_TAG:
        raise ConsistencyError(f"checkpoint architecture {ckpt.arch!r} is not {ARCH_TAG!r}")
    config = CnnConfig(**ckpt.config)
    expected = dict(_param_shapes(config))
    for name, shape in expected.items():
        if name not in ckpt.params or ckpt.params[name].shape != shape:
            raise ConsistencyError(f"checkpoint parameter {name!r} missing or misshaped")
    return CnnModel(config, ckpt.params, ckpt.vocab_hash)


def dump_matrix_csv(path, matrix: np.ndarray) -> None:
    """Debug dump of an encoded or predicted matrix."""
    np.savetxt(path, matrix, delimiter=",", fmt="%.10g")


class CnnPredictor:
    """Adapter exposing the evaluation-harness predict interface."""

    name = "cnn"

    def __init__(self, model: CnnModel):
        self.model = model

    def predict(
        self, observed: FrameTimeline, video_length: int, horizon: int
    ) -> FrameTimeline:
        seq = segments_from_frames(observed)
        full_half = floor_frac(0.5, video_length)
        return cnn_predict_future(self.model, seq, horizon, full_half)
