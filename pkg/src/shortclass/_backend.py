"""Kernel backend selection.

The compiled extension ``shortclass._kernels`` is used when it was built and
``SHORTCLASS_PURE`` is not set; otherwise the pure-Python mirror in
``shortclass._kernels_py`` is used. Both produce bit-identical results.
"""
import contextlib
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _kernels_py if (_compiled is None or os.environ.get("SHORTCLASS_PURE")) else _compiled


def kernels():
    return _active


def name():
    return "compiled" if _active is _compiled else "python"


def available():
    return ["python"] + (["compiled"] if _compiled is not None else [])


def set_backend(which):
    global _active
    if which == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    elif which == "python":
        _active = _kernels_py
    else:
        raise ValueError(f"unknown backend {which!r}")


@contextlib.contextmanager
def use(which):
    previous = _active
    set_backend(which)
    try:
        yield
    finally:
        globals()["_active"] = previous
