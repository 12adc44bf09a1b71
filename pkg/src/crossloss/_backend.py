"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``CROSSLOSS_BACKEND=python`` to force the fallback.
"""
import importlib
import os

_MODULES = {"cython": "crossloss._ckernels", "python": "crossloss._pykernels"}


def load(name):
    """Import a backend by name (``"cython"`` or ``"python"``)."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown backend {name!r}") from None


def available():
    names = []
    for name in _MODULES:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    forced = os.environ.get("CROSSLOSS_BACKEND", "").strip().lower()
    if forced:
        return forced, load(forced)
    try:
        return "cython", load("cython")
    except ImportError:
        return "python", load("python")


BACKEND, kernels = _select()
