"""Backend selection for the box-variance kernels.

The compiled module is used when importable. Set ``INTERTRADE_BACKEND=python``
to force the numpy implementation (``cython`` makes a missing extension an
import error instead of a silent fallback).
"""
import importlib
import logging
import os

from . import _pykernels

log = logging.getLogger(__name__)

BACKENDS = ("cython", "python")


def load(name=None):
    """Return the kernel module for ``name`` (``None`` means best available)."""
    if name == "python":
        return _pykernels
    try:
        return importlib.import_module("intertrade._ckernels")
    except ImportError:
        if name == "cython":
            raise
        log.debug("compiled kernels unavailable, using numpy fallback")
        return _pykernels


def available():
    out = ["python"]
    try:
        importlib.import_module("intertrade._ckernels")
        out.insert(0, "cython")
    except ImportError:
        pass
    return out


_active = load(os.environ.get("INTERTRADE_BACKEND") or None)


def active():
    return _active


def backend_name():
    return _active.NAME


def set_backend(name):
    """Switch the process-wide backend; returns the previous name."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    prev = _active.NAME
    _active = load(name)
    return prev
