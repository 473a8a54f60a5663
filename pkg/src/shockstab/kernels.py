"""Kernel backend selection.

The compiled Cython core is used when it imports; otherwise the numpy
fallback.  ``SHOCKSTAB_KERNELS=python`` forces the fallback and
``SHOCKSTAB_KERNELS=cython`` makes a missing extension an error.
"""
import os

from . import _kernels_py

_choice = os.environ.get("SHOCKSTAB_KERNELS", "auto").lower()

if _choice == "python":
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

hermite_eval = _impl.hermite_eval
hyperbolic_rhs = _impl.hyperbolic_rhs
diffusion_step = _impl.diffusion_step
pressure_gap = _impl.pressure_gap
shift_integrals = _impl.shift_integrals


def backend(name):
    """Return the kernel module for ``name`` ('python' or 'cython')."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
