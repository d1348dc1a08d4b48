"""Shared independent oracles and generators for the test suite.

Everything here is deliberately implemented with plain loops and scalar
arithmetic so it cannot share a bug with the vectorized library code it
checks.
"""

import math

import numpy as np

from anticipate.timeline import FrameTimeline


def rle_oracle(frames):
    """Linear-scan run-length encoding."""
    runs = []
    for f in frames:
        if runs and runs[-1][0] == f:
            runs[-1][1] += 1
        else:
            runs.append([f, 1])
    return [(label, length) for label, length in runs]


def gru_scalar_oracle(x, h0, ws, us, bs):
    """Step-by-step scalar GRU evaluation, no vectorized ops."""
    wz, wr, wh = ws
    uz, ur, uh = us
    bz, br, bh = bs
    steps, din = x.shape
    hidden = h0.shape[0]
    h_prev = [float(v) for v in h0]
    out = []
    for t in range(steps):
        z = []
        r = []
        for j in range(hidden):
            az = bz[j] + sum(x[t, i] * wz[i, j] for i in range(din))
            az += sum(h_prev[i] * uz[i, j] for i in range(hidden))
            ar = br[j] + sum(x[t, i] * wr[i, j] for i in range(din))
            ar += sum(h_prev[i] * ur[i, j] for i in range(hidden))
            z.append(1.0 / (1.0 + math.exp(-az)))
            r.append(1.0 / (1.0 + math.exp(-ar)))
        h_new = []
        for j in range(hidden):
            ah = bh[j] + sum(x[t, i] * wh[i, j] for i in range(din))
            ah += sum(r[i] * h_prev[i] * uh[i, j] for i in range(hidden))
            hc = math.tanh(ah)
            h_new.append((1.0 - z[j]) * h_prev[j] + z[j] * hc)
        h_prev = h_new
        out.append(h_new)
    return np.array(out)


def segment_timeline(rng, num_classes, n_segments, lo=5, hi=10):
    """Random timeline built from whole segments (adjacent labels distinct)."""
    labels = [int(rng.integers(num_classes))]
    while len(labels) < n_segments:
        nxt = int(rng.integers(num_classes))
        if nxt != labels[-1]:
            labels.append(nxt)
    frames = np.concatenate(
        [np.full(int(rng.integers(lo, hi + 1)), label) for label in labels]
    )
    return FrameTimeline(frames)


class FixedRng:
    """Stand-in RNG replaying a queue of integers() results."""

    def __init__(self, values):
        self.values = list(values)

    def integers(self, low, high=None):
        value = self.values.pop(0)
        upper = low if high is None else high
        lower = 0 if high is None else low
        assert lower <= value < upper, f"scripted value {value} outside [{lower}, {upper})"
        return value


def moc_oracle(pred, gt):
    """Brute-force per-frame counting MoC; mirrors the metric definition
    with plain Python loops."""
    classes = sorted(set(int(c) for c in gt))
    accs = []
    per_class = {}
    for c in classes:
        total = 0
        correct = 0
        for p, g in zip(pred, gt):
            if int(g) == c:
                total += 1
                if int(p) == c:
                    correct += 1
        acc = correct / total
        per_class[c] = acc
        accs.append(acc)
    return sum(accs) / len(accs), per_class


def action_oracle(pred, gt, positions=3):
    """Interval-arithmetic positional action matching."""
    pred_runs = rle_oracle(list(pred))
    gt_runs = rle_oracle(list(gt))

    def interval(runs, k):
        start = sum(length for _, length in runs[:k])
        return start, start + runs[k][1]

    results = []
    for k in range(positions):
        if k >= len(gt_runs):
            results.append(None)
            continue
        if k >= len(pred_runs) or pred_runs[k][0] != gt_runs[k][0]:
            results.append(False)
            continue
        s1, e1 = interval(pred_runs, k)
        s2, e2 = interval(gt_runs, k)
        inter = max(0, min(e1, e2) - max(s1, s2))
        union = (e1 - s1) + (e2 - s2) - inter
        results.append(inter / union >= 0.5)
    return results
