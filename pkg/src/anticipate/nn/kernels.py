"""Kernel backend selection.

The compiled Cython extension is used when it has been built; otherwise
the pure NumPy twin takes over. Set ``ANTICIPATE_BACKEND=python`` to
force the fallback or ``ANTICIPATE_BACKEND=compiled`` to require the
extension (raising if missing). Both backends implement identical math;
``benchmarks/bench_kernels.py`` compares their speed.
"""

from __future__ import annotations

import os

from . import _kernels_py

_requested = os.environ.get("ANTICIPATE_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "python", "compiled"):
    raise ValueError(
        f"ANTICIPATE_BACKEND must be 'auto', 'python', or 'compiled', got {_requested!r}"
    )

_impl = _kernels_py
_backend_name = "python"
if _requested != "python":
    try:
        from . import _kernels_cy as _impl_c
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "ANTICIPATE_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation` or `python setup.py build_ext --inplace`"
            ) from None
    else:
        _impl = _impl_c
        _backend_name = "compiled"


def backend_name() -> str:
    """Which kernel implementation is active: 'compiled' or 'python'."""
    return _backend_name


gru_layer_forward = _impl.gru_layer_forward
gru_layer_backward = _impl.gru_layer_backward
conv1d_forward = _impl.conv1d_forward
conv1d_backward = _impl.conv1d_backward
