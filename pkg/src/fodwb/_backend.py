"""Select the compiled kernels when available, else the numpy fallback.

Set ``FODWB_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("FODWB_PURE_PYTHON", "") == "1":
    from . import _kernels_py as kernels
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels
        COMPILED = False

real_sh_basis = kernels.real_sh_basis
signed_rank_counts = kernels.signed_rank_counts

__all__ = ["COMPILED", "real_sh_basis", "signed_rank_counts"]
