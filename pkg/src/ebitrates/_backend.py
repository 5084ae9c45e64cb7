"""Kernel selection: compiled extension if importable, numpy fallback otherwise.

Set ``EBITRATES_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
entropy_newton = _fallback.entropy_newton
permutation_accumulate = _fallback.permutation_accumulate

if os.environ.get("EBITRATES_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "compiled"
        entropy_newton = _kernels.entropy_newton
        permutation_accumulate = _kernels.permutation_accumulate
