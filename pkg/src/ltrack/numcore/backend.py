"""Kernel backend selection: compiled extension when built, numpy otherwise."""

try:
    from . import _kernels as _impl
    COMPILED = True
except ImportError:  # extension not built; pure fallback
    from . import pykernels as _impl
    COMPILED = False

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward


def backend_name():
    return "compiled" if COMPILED else "python"
