"""Metrics and evaluation protocols.

The headline metric is frame accuracy as mean over classes (MoC): per
ground-truth class present in the scored span, the fraction of that
class's frames predicted correctly, averaged over the present classes.
Class counts are pooled over the whole test corpus before the class mean
is taken; per-video MoC values are also kept for diagnostics.

A predictor is anything with a ``name`` attribute and a
``predict(observed, video_length, horizon) -> FrameTimeline`` method.
For each test video and observation fraction the predictor runs once at
the largest requested horizon; shorter prediction fractions score its
prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .dataio import Corpus, SplitSpec
from .errors import ConsistencyError
from .timeline import (
    FrameTimeline,
    ObservationSplit,
    floor_frac,
    segments_from_frames,
    truncate_future,
)

__all__ = [
    "Predictor",
    "EvaluationReport",
    "moc_accuracy",
    "pooled_moc",
    "action_level_accuracy",
    "length_bucketed_moc",
    "evaluate_grid",
    "write_per_video_csv",
]

OBSERVED_GROUND_TRUTH = "ground-truth"
OBSERVED_DECODED = "decoded"


class Predictor(Protocol):
    name: str

    def predict(
        self, observed: FrameTimeline, video_length: int, horizon: int
    ) -> FrameTimeline: ...


def _class_counts(pred: FrameTimeline, gt: FrameTimeline) -> dict[int, tuple[int, int]]:
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: prediction {len(pred)} vs ground truth {len(gt)}")
    counts: dict[int, tuple[int, int]] = {}
    for label in np.unique(gt.frames):
        mask = gt.frames == label
        correct = int(np.count_nonzero(pred.frames[mask] == label))
        counts[int(label)] = (correct, int(np.count_nonzero(mask)))
    return counts


def _mean_over_classes(counts: dict[int, tuple[int, int]]) -> tuple[float, dict[int, float]]:
    per_class = {
        label: correct / total
        for label, (correct, total) in sorted(counts.items())
        if total > 0
    }
    moc = sum(per_class.values()) / len(per_class)
    return moc, per_class


def moc_accuracy(pred: FrameTimeline, gt: FrameTimeline) -> tuple[float, dict[int, float]]:
    """Frame accuracy per ground-truth class, averaged over the classes
    present in ``gt``. Returns ``(moc, per_class_accuracies)``."""
    return _mean_over_classes(_class_counts(pred, gt))


def pooled_moc(pairs: Iterable[tuple[FrameTimeline, FrameTimeline]]) -> tuple[float, dict[int, float]]:
    """MoC with per-class frame counts pooled across many (pred, gt) pairs."""
    pooled: dict[int, list[int]] = {}
    for pred, gt in pairs:
        for label, (correct, total) in _class_counts(pred, gt).items():
            cell = pooled.setdefault(label, [0, 0])
            cell[0] += correct
            cell[1] += total
    return _mean_over_classes({k: (c, t) for k, (c, t) in pooled.items()})


def action_level_accuracy(
    pred: FrameTimeline, gt: FrameTimeline, positions: int = 3
) -> list[bool | None]:
    """Positional segment detection over the scored span.

    The k-th future action counts as detected when the k-th predicted
    segment exists, carries the k-th ground-truth segment's label, and
    their frame intervals overlap with IoU >= 0.5 (boundary inclusive).
    Returns one entry per position: True/False, or None when the ground
    truth has no k-th segment (the video is not evaluable there).
    """
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: prediction {len(pred)} vs ground truth {len(gt)}")
    pred_segs = segments_from_frames(pred).segments
    gt_segs = segments_from_frames(gt).segments
    pred_starts = np.concatenate(([0], np.cumsum([s.length for s in pred_segs])))
    gt_starts = np.concatenate(([0], np.cumsum([s.length for s in gt_segs])))
    results: list[bool | None] = []
    for k in range(positions):
        if k >= len(gt_segs):
            results.append(None)
            continue
        if k >= len(pred_segs) or pred_segs[k].label != gt_segs[k].label:
            results.append(False)
            continue
        s1, e1 = int(pred_starts[k]), int(pred_starts[k + 1])
        s2, e2 = int(gt_starts[k]), int(gt_starts[k + 1])
        inter = max(0, min(e1, e2) - max(s1, s2))
        union = (e1 - s1) + (e2 - s2) - inter
        results.append(inter / union >= 0.5)
    return results


def length_bucketed_moc(
    pairs: Sequence[tuple[FrameTimeline, FrameTimeline]],
    bucket_edges: Sequence[int],
) -> dict[tuple[int, int], float]:
    """Pooled MoC per half-open prediction-length bucket ``(lo, hi]``.

    Videos are assigned by scored-span frame count; a span landing
    exactly on an edge belongs to the bucket below it. Buckets with no
    videos are absent from the result, never reported as zero.
    """
    edges = list(bucket_edges)
    if len(edges) < 2:
        raise ValueError("need at least two edges to form one bucket")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError(f"bucket edges must be strictly increasing: {edges}")
    buckets: dict[tuple[int, int], list] = {}
    for pred, gt in pairs:
        span = len(gt)
        for lo, hi in zip(edges, edges[1:]):
            if lo < span <= hi:
                buckets.setdefault((lo, hi), []).append((pred, gt))
                break
    return {bucket: pooled_moc(members)[0] for bucket, members in sorted(buckets.items())}


@dataclass
class EvaluationReport:
    """Results of one predictor over the (observation, prediction) grid."""

    model_name: str
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    observed_source: str
    video_count: int
    moc: dict[tuple[float, float], float]
    per_class: dict[tuple[float, float], dict[int, float]]
    per_video: dict[tuple[float, float], dict[str, float]]
    action_positions: dict[tuple[float, float], tuple[float | None, ...]] = field(
        default_factory=dict
    )
    bucket_moc: dict[tuple[float, float], dict[tuple[int, int], float]] = field(
        default_factory=dict
    )
    config_echo: dict = field(default_factory=dict)


def evaluate_grid(
    predictor: Predictor,
    corpus: Corpus,
    split: SplitSpec,
    alphas: Sequence[float],
    betas: Sequence[float],
    observed_source: str = OBSERVED_GROUND_TRUTH,
    bucket_edges: Sequence[int] | None = None,
    action_positions: int = 3,
) -> EvaluationReport:
    """Score one predictor over every test video and fraction pair.

    The observed prefix comes from the ground truth or, for the noisy
    protocol, from the decoded timelines; scoring is always against the
    ground-truth future. Videos iterate in sorted-id order, so reports
    are deterministic for deterministic predictors.
    """
    if observed_source not in (OBSERVED_GROUND_TRUTH, OBSERVED_DECODED):
        raise ValueError(f"unknown observed source {observed_source!r}")
    alphas = tuple(sorted(alphas))
    betas = tuple(sorted(betas))
    for a in alphas:
        for b in betas:
            ObservationSplit(a, b)  # validates ranges and a + b <= 1
    horizon_beta = max(betas)

    counts: dict[tuple[float, float], dict[int, list[int]]] = {
        (a, b): {} for a in alphas for b in betas
    }
    per_video: dict[tuple[float, float], dict[str, float]] = {
        (a, b): {} for a in alphas for b in betas
    }
    hits: dict[tuple[float, float], list[list[int]]] = {
        (a, b): [[0, 0] for _ in range(action_positions)] for a in alphas for b in betas
    }
    pairs: dict[tuple[float, float], list[tuple[FrameTimeline, FrameTimeline]]] = {
        (a, b): [] for a in alphas for b in betas
    }

    for vid in sorted(split.test_ids):
        record = corpus.by_id[vid]
        gt = record.ground_truth
        total = len(gt)
        for a in alphas:
            t = floor_frac(a, total)
            if t < 1 or t >= total:
                raise ValueError(
                    f"video {vid!r} ({total} frames) cannot be observed at fraction {a}"
                )
            if observed_source == OBSERVED_DECODED:
                if record.decoded is None:
                    raise ConsistencyError(f"video {vid!r} has no decoded observation")
                source = record.decoded
            else:
                source = gt
            observed = FrameTimeline(source.frames[:t])
            horizon = floor_frac(horizon_beta, total)
            if horizon < 1:
                raise ValueError(
                    f"video {vid!r} ({total} frames) yields an empty span at fraction {horizon_beta}"
                )
            prediction = predictor.predict(observed, total, horizon)
            if len(prediction) != horizon:
                raise ConsistencyError(
                    f"predictor {predictor.name!r} returned {len(prediction)} frames, "
                    f"expected {horizon}"
                )
            for b in betas:
                span = floor_frac(b, total)
                if span < 1:
                    raise ValueError(
                        f"video {vid!r} ({total} frames) yields an empty span at fraction {b}"
                    )
                pred = truncate_future(prediction, b, total)
                gt_future = FrameTimeline(gt.frames[t : t + span])
                cell = counts[(a, b)]
                for label, (correct, frame_total) in _class_counts(pred, gt_future).items():
                    slot = cell.setdefault(label, [0, 0])
                    slot[0] += correct
                    slot[1] += frame_total
                per_video[(a, b)][vid] = _mean_over_classes(
                    _class_counts(pred, gt_future)
                )[0]
                for k, outcome in enumerate(
                    action_level_accuracy(pred, gt_future, action_positions)
                ):
                    if outcome is not None:
                        hits[(a, b)][k][1] += 1
                        hits[(a, b)][k][0] += int(outcome)
                pairs[(a, b)].append((pred, gt_future))

    moc = {}
    per_class = {}
    positions = {}
    bucket = {}
    for key, cell in counts.items():
        moc[key], per_class[key] = _mean_over_classes(
            {k: (c, t) for k, (c, t) in cell.items()}
        )
        positions[key] = tuple(
            (h / n) if n else None for h, n in hits[key]
        )
        if bucket_edges is not None:
            bucket[key] = length_bucketed_moc(pairs[key], bucket_edges)

    return EvaluationReport(
        model_name=predictor.name,
        alphas=alphas,
        betas=betas,
        observed_source=observed_source,
        video_count=len(split.test_ids),
        moc=moc,
        per_class=per_class,
        per_video=per_video,
        action_positions=positions,
        bucket_moc=bucket,
    )


def write_per_video_csv(report: EvaluationReport, path: str | Path) -> None:
    """One row per (video, alpha, beta); header comments echo the config."""
    lines = [
        f"# model={report.model_name}",
        f"# observed={report.observed_source}",
        f"# videos={report.video_count}",
    ]
    for key in sorted(report.config_echo):
        lines.append(f"# {key}={report.config_echo[key]}")
    lines.append("video_id,alpha,beta,moc")
    for a in report.alphas:
        for b in report.betas:
            for vid in sorted(report.per_video[(a, b)]):
                lines.append(f"{vid},{a:g},{b:g},{report.per_video[(a, b)][vid]:.6f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
