"""Central finite-difference verification of analytic gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["BlockReport", "GradCheckReport", "grad_check"]


@dataclass(frozen=True)
class BlockReport:
    name: str
    max_rel_error: float
    max_abs_error: float
    finite: bool


@dataclass(frozen=True)
class GradCheckReport:
    blocks: tuple[BlockReport, ...]

    @property
    def max_rel_error(self) -> float:
        return max(b.max_rel_error for b in self.blocks)

    @property
    def all_finite(self) -> bool:
        return all(b.finite for b in self.blocks)

    def passed(self, tolerance: float) -> bool:
        return self.all_finite and self.max_rel_error < tolerance

    def worst_block(self) -> BlockReport:
        return max(self.blocks, key=lambda b: b.max_rel_error)


def grad_check(
    loss_fn: Callable[[], float],
    grads_fn: Callable[[], dict[str, np.ndarray]],
    params: dict[str, np.ndarray],
    step: float = 1e-5,
) -> GradCheckReport:
    """Compare analytic gradients against central differences, per block.

    ``loss_fn`` reevaluates the loss from the current (mutable) ``params``
    arrays; ``grads_fn`` returns the analytic gradients at the unperturbed
    point. Every entry of every block is perturbed by ``+-step``. The
    relative error uses ``|a - n| / max(1e-6, |a| + |n|)``; the floor keeps
    finite-difference roundoff on near-zero gradients from registering as
    disagreement.
    """
    analytic = grads_fn()
    blocks = []
    for name, p in params.items():
        a = analytic[name]
        flat = p.reshape(-1)
        max_rel = 0.0
        max_abs = 0.0
        finite = bool(np.isfinite(a).all())
        a_flat = a.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            loss_plus = loss_fn()
            flat[idx] = orig - step
            loss_minus = loss_fn()
            flat[idx] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            if not math.isfinite(numeric):
                finite = False
                continue
            diff = abs(a_flat[idx] - numeric)
            rel = diff / max(1e-6, abs(a_flat[idx]) + abs(numeric))
            max_rel = max(max_rel, rel)
            max_abs = max(max_abs, diff)
        blocks.append(BlockReport(name, max_rel, max_abs, finite))
    return GradCheckReport(tuple(blocks))
