"""Backend selection for the per-AP hot kernels.

The compiled ``_kernels`` extension is used when importable; otherwise, or
when ``SIXDMA_KERNELS=python`` is set, the numpy versions in ``_pykernels``
are used. Both expose the same functions.
"""
import os

from . import _pykernels

_NAMES = ("ap_channel", "ap_channel_positions", "ap_channel_orientations",
          "local_objective", "fd_gradient", "surrogate_eval")


def _load(name):
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    out = ["python"]
    try:
        _load("compiled")
        out.append("compiled")
    except ImportError:
        pass
    return out


def use_backend(name):
    """Switch the module-level kernels to ``name`` ('compiled' or 'python')."""
    global BACKEND
    mod = _load(name)
    g = globals()
    for fn in _NAMES:
        g[fn] = getattr(mod, fn)
    BACKEND = name


BACKEND = "python"
_requested = os.environ.get("SIXDMA_KERNELS", "").strip().lower()
if _requested == "python":
    use_backend("python")
else:
    try:
        use_backend("compiled")
    except ImportError:
        if _requested == "compiled":
            raise
        use_backend("python")
