#!/usr/bin/env python3
"""Benchmark the compiled kernel backend against the NumPy fallback.

Times the GRU sequence forward/backward and conv1d forward/backward at
the production sizes (hidden 256 recurrence, 128x48 matrices), plus a
small end-to-end training epoch for each model. Run after building the
extension:

    python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from anticipate.nn import _kernels_py

try:
    from anticipate.nn import _kernels_cy
except ImportError:
    _kernels_cy = None


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_gru(backend, repeats, steps=8, din=49, hidden=256):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(steps, din))
    h0 = np.zeros(hidden)
    ws = [rng.normal(size=(din, hidden)) * 0.05 for _ in range(3)]
    us = [rng.normal(size=(hidden, hidden)) * 0.05 for _ in range(3)]
    bs = [np.zeros(hidden) for _ in range(3)]
    fwd = time_call(lambda: backend.gru_layer_forward(x, h0, *ws, *us, *bs), repeats)
    h, z, r, hc = backend.gru_layer_forward(x, h0, *ws, *us, *bs)
    d_h = rng.normal(size=(steps, hidden))
    bwd = time_call(
        lambda: backend.gru_layer_backward(x, h0, *ws, *us, h, z, r, hc, d_h), repeats
    )
    return fwd, bwd


def bench_conv(backend, repeats, rows=128, cin=48, maps=8):
    rng = np.random.default_rng(1)
    x = np.zeros((rows, cin))
    x[np.arange(rows), rng.integers(0, cin, size=rows)] = 1.0  # one-hot rows
    w = rng.normal(size=(maps, cin, 5)) * 0.1
    b = np.zeros(maps)
    fwd = time_call(lambda: backend.conv1d_forward(x, w, b), repeats)
    d_y = rng.normal(size=(rows, maps))
    bwd = time_call(lambda: backend.conv1d_backward(x, w, d_y), repeats)
    return fwd, bwd


def bench_training(repeats):
    """One small training epoch per model under each backend."""
    import anticipate.nn.kernels as kernels
    from anticipate.cnn import CnnConfig, train_cnn
    from anticipate.rnn import RnnConfig, train_rnn
    from anticipate.timeline import FrameTimeline, Segment, SegmentSequence

    rng = np.random.default_rng(2)
    seqs = []
    for _ in range(30):
        labels = rng.permutation(5)[:4]
        segs = tuple(Segment(int(l), int(rng.integers(8, 16))) for l in labels)
        seqs.append(SegmentSequence(segs, sum(s.length for s in segs)))
    timelines = [
        FrameTimeline(np.repeat([s.label for s in q.segments], [s.length for s in q.segments]))
        for q in seqs
    ]
    results = {}
    for backend, name in ((_kernels_py, "python"), (_kernels_cy, "compiled")):
        if backend is None:
            continue
        kernels.gru_layer_forward = backend.gru_layer_forward
        kernels.gru_layer_backward = backend.gru_layer_backward
        kernels.conv1d_forward = backend.conv1d_forward
        kernels.conv1d_backward = backend.conv1d_backward
        rnn_cfg = RnnConfig(num_classes=5, hidden_size=64, epochs=1, seed=0, length_scale=4.0)
        cnn_cfg = CnnConfig(rows=32, num_classes=5, epochs=1, seed=0)
        results[name] = (
            time_call(lambda: train_rnn(seqs, rnn_cfg), repeats),
            time_call(lambda: train_cnn(timelines, cnn_cfg), repeats),
        )
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if _kernels_cy is not None:
        backends.append(("compiled", _kernels_cy))
    else:
        print("compiled extension not built; showing the NumPy fallback only\n")

    rows = {}
    for name, backend in backends:
        gru_small = bench_gru(backend, args.repeats, hidden=64)
        gru_big = bench_gru(backend, args.repeats, hidden=256)
        conv = bench_conv(backend, args.repeats)
        rows[name] = (*gru_small, *gru_big, *conv)

    print(f"{'kernel':<30}" + "".join(f"{name:>12}" for name, _ in backends) + "   speedup")
    labels = (
        "gru forward (T=8, H=64)",
        "gru backward (T=8, H=64)",
        "gru forward (T=8, H=256)",
        "gru backward (T=8, H=256)",
        "conv1d forward (128x48 1-hot)",
        "conv1d backward",
    )
    for i, label in enumerate(labels):
        cells = [rows[name][i] for name, _ in backends]
        speed = f"{cells[0] / cells[-1]:10.1f}x" if len(cells) > 1 else ""
        print(f"{label:<30}" + "".join(f"{c * 1e6:10.0f}us" for c in cells) + speed)

    print("\nend-to-end single-epoch training (30 synthetic videos):")
    training = bench_training(max(1, args.repeats // 2))
    for model_idx, label in enumerate(("rnn", "cnn")):
        cells = [training[name][model_idx] for name, _ in backends if name in training]
        speed = f"{cells[0] / cells[-1]:10.1f}x" if len(cells) > 1 else ""
        print(f"{label:<30}" + "".join(f"{c * 1e3:10.1f}ms" for c in cells) + speed)


if __name__ == "__main__":
    main()
