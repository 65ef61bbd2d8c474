"""Backend switch for the hot kernels.

Set ``NDAR_DISABLE_NUMBA=1`` in the environment (before import) to run the
pure-numpy implementations in :mod:`ndar.kernels_np` instead of the compiled
ones in :mod:`ndar.kernels`.  Numba missing entirely has the same effect.
"""
import os
import warnings

_FLAG = os.environ.get("NDAR_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False
    if not DISABLED:
        warnings.warn("numba is not installed - falling back to numpy kernels")

USE_NUMBA = HAVE_NUMBA and not DISABLED


def get_kernels(name: str | None = None):
    """Return the kernel module: ``"numba"``, ``"numpy"`` or the env default."""
    if name is None:
        name = "numba" if USE_NUMBA else "numpy"
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba kernels requested but numba is not importable")
        from . import kernels

        return kernels
    if name == "numpy":
        from . import kernels_np

        return kernels_np
    raise ValueError(f"unknown kernel backend {name!r}")
