"""Hot loops with a compiled backend and a pure-Python fallback.

The Cython extension ``_ckernels`` is used when it was built; otherwise, or
when the environment variable ``MCFXT_PURE_PYTHON=1`` is set, the NumPy
implementations in :mod:`._fallback` are used.  Both backends give the same
results to rounding error.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from types import ModuleType

import numpy as np

from . import _fallback

__all__ = ["BACKEND", "projected_power", "count_extrema", "available_backends", "get_backend", "use_backend"]


def _load_compiled() -> ModuleType | None:
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()
_force_python = os.environ.get("MCFXT_PURE_PYTHON", "").lower() in ("1", "true", "yes")
_impl = _fallback if (_compiled is None or _force_python) else _compiled
BACKEND = "python" if _impl is _fallback else "cython"


def available_backends() -> dict[str, ModuleType]:
    out = {"python": _fallback}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


class _Backend:
    def __init__(self, module):
        self._m = module

    def projected_power(self, phases, proj):
        return _projected_power(self._m, phases, proj)

    def count_extrema(self, values, threshold):
        return _count_extrema(self._m, values, threshold)


def get_backend(name: str) -> _Backend:
    try:
        return _Backend(available_backends()[name])
    except KeyError:
        raise ValueError(f"backend {name!r} not available") from None


@contextmanager
def use_backend(name: str):
    """Temporarily route the module-level kernels to backend ``name``."""
    global _impl, BACKEND
    module = get_backend(name)._m
    saved = _impl, BACKEND
    _impl, BACKEND = module, name
    try:
        yield
    finally:
        _impl, BACKEND = saved


def _projected_power(module, phases, proj):
    phases = np.ascontiguousarray(phases, dtype=np.float64)
    proj = np.ascontiguousarray(proj, dtype=np.complex128)
    if phases.ndim != 2 or proj.ndim != 2 or proj.shape[0] != phases.shape[1]:
        raise ValueError("shape mismatch: need phases (T, N) and proj (N, R)")
    out = np.empty(phases.shape[0])
    module.projected_power(phases, proj, out)
    return out


def _count_extrema(module, values, threshold):
    return int(module.count_extrema(np.ascontiguousarray(values, dtype=np.float64), float(threshold)))


def projected_power(phases, proj) -> np.ndarray:
    """Spectrally projected power for each row of PMP phases.

    ``phases`` is (T x N) and ``proj`` (N x R, complex) maps the unit
    phasors ``exp(-1j * phi)`` to R orthogonal spectral components; row t
    of the result is ``sum_j |sum_l proj[l, j] exp(-1j phi[t, l])|**2``.
    """
    return _projected_power(_impl, phases, proj)


def count_extrema(values, threshold: float) -> int:
    """Number of confirmed reversals (peaks plus troughs) with hysteresis ``threshold``."""
    return _count_extrema(_impl, values, threshold)
