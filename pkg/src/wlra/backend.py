"""Kernel backend selection.

The compiled extension ``wlra._core`` is used when importable; otherwise
the NumPy fallback in ``wlra._pycore`` is.  ``WLRA_BACKEND`` may be set to
``python`` or ``compiled`` to force a choice at import time, and
:func:`use` switches temporarily (tests and benchmarks).
"""
import contextlib
import os

from . import _pycore

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_BACKENDS = {"python": _pycore}
if _core is not None:
    _BACKENDS["compiled"] = _core


def available():
    return sorted(_BACKENDS)


def _initial():
    want = os.environ.get("WLRA_BACKEND", "").strip().lower()
    if want:
        if want not in _BACKENDS:
            raise ImportError(f"WLRA_BACKEND={want!r} is not available (have {available()})")
        return _BACKENDS[want]
    return _core if _core is not None else _pycore


_current = _initial()


def current():
    """The active kernel module."""
    return _current


def name():
    return _current.NAME


def select(which):
    global _current
    if which not in _BACKENDS:
        raise ValueError(f"backend {which!r} not available (have {available()})")
    _current = _BACKENDS[which]
    return _current


@contextlib.contextmanager
def use(which):
    global _current
    prev = _current
    select(which)
    try:
        yield _current
    finally:
        _current = prev


def threads():
    """Worker count for row-parallel solves (``WLRA_THREADS``)."""
    raw = os.environ.get("WLRA_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
