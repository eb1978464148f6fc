"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set ``CCPP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("CCPP_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def backend(name=None):
    """Return the kernel module for ``name`` ("cython"/"python"), or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def component_labels(n, ii, jj, impl=None):
    return (impl or _impl).component_labels(n, ii, jj)


def leader_labels(xy, radius, indptr, nbr, impl=None):
    return (impl or _impl).leader_labels(xy, radius, indptr, nbr)


def visible_any(*args, impl=None):
    return (impl or _impl).visible_any(*args)
