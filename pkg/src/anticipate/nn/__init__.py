"""Minimal deterministic numerical substrate.

Float64 everywhere: the models are tiny and bit-reproducibility across
runs matters more than throughput. The recurrent and convolutional hot
kernels have a compiled backend (see :mod:`anticipate.nn.kernels`).
"""

from .adam import AdamState, adam_step
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check
from .kernels import backend_name

__all__ = [
    "AdamState",
    "adam_step",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "GradCheckReport",
    "grad_check",
    "backend_name",
]
