"""Finite-difference verification of the three model gradient paths."""

import numpy as np

from anticipate.cnn import CnnConfig, cnn_loss_and_grads, init_cnn_model, make_cnn_examples
from anticipate.nn.gradcheck import grad_check
from anticipate.nn.layers import dense_forward
from anticipate.rnn import (
    RnnConfig,
    init_rnn_model,
    make_rnn_examples,
    rnn_loss_and_grads,
)
from anticipate.timeline import Segment, SegmentSequence

from helpers import segment_timeline


def test_dense_squared_loss_toy():
    rng = np.random.default_rng(0)
    params = {"w": rng.normal(size=(3, 4)), "b": rng.normal(size=3)}
    x = rng.normal(size=4)
    target = rng.normal(size=3)

    def loss_fn():
        y = dense_forward(x, params["w"], params["b"])
        return float(((y - target) ** 2).sum())

    def grads_fn():
        y = dense_forward(x, params["w"], params["b"])
        d_y = 2.0 * (y - target)
        return {"w": np.outer(d_y, x), "b": d_y}

    report = grad_check(loss_fn, grads_fn, params)
    assert report.passed(1e-6), report.worst_block()


def test_rnn_sequence_loss_gradients():
    rng = np.random.default_rng(1)
    config = RnnConfig(num_classes=3, hidden_size=6, seed=1)
    model = init_rnn_model(config, rng)
    seq = SegmentSequence((Segment(0, 5), Segment(2, 4), Segment(1, 6), Segment(0, 5)), 20)
    tokens, target = make_rnn_examples(seq, 20, 1.0, rng)[-1]
    assert len(tokens) == 3

    def loss_fn():
        return rnn_loss_and_grads(model, tokens, target)[0]

    def grads_fn():
        return rnn_loss_and_grads(model, tokens, target)[1]

    report = grad_check(loss_fn, grads_fn, model.params)
    assert report.all_finite
    assert report.max_rel_error < 1e-4, report.worst_block()


def test_cnn_squared_loss_gradients():
    rng = np.random.default_rng(2)
    config = CnnConfig(rows=8, num_classes=3, seed=2)
    model = init_cnn_model(config, rng)
    timeline = segment_timeline(rng, 3, 4)
    x, target = make_cnn_examples(timeline, 8, 3)[1]

    def loss_fn():
        return cnn_loss_and_grads(model, x, target)[0]

    def grads_fn():
        return cnn_loss_and_grads(model, x, target)[1]

    report = grad_check(loss_fn, grads_fn, model.params)
    assert report.all_finite
    assert report.max_rel_error < 1e-4, report.worst_block()


def test_cnn_cross_entropy_gradients():
    rng = np.random.default_rng(3)
    config = CnnConfig(rows=8, num_classes=3, loss_mode="xent", seed=3)
    model = init_cnn_model(config, rng)
    timeline = segment_timeline(rng, 3, 4)
    x, target = make_cnn_examples(timeline, 8, 3)[0]

    def loss_fn():
        return cnn_loss_and_grads(model, x, target)[0]

    def grads_fn():
        return cnn_loss_and_grads(model, x, target)[1]

    report = grad_check(loss_fn, grads_fn, model.params)
    assert report.passed(1e-4), report.worst_block()


def test_injected_fault_is_detected():
    rng = np.random.default_rng(4)
    params = {"w": rng.normal(size=(2, 2))}
    x = rng.normal(size=2)

    def loss_fn():
        return float((params["w"] @ x).sum())

    def grads_fn():
        return {"w": np.outer(np.ones(2), x) + 0.05}  # wrong on purpose

    report = grad_check(loss_fn, grads_fn, params)
    assert not report.passed(1e-4)
    assert report.worst_block().name == "w"
