"""Backend selection for the element kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``STOCHAC_PURE_PYTHON`` is set to a non-empty value
other than ``0``, the numpy versions are used.
"""
import os

from . import _kernels_py

_force_py = os.environ.get("STOCHAC_PURE_PYTHON", "") not in ("", "0")

if _force_py:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

nonlinear_load = _impl.nonlinear_load
cubic_jacobian_values = _impl.cubic_jacobian_values
power_integrals = _impl.power_integrals


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"cython"`` explicitly."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
