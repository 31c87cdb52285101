"""Backend selection for the orbit loops.

The compiled extension is used when it imports; otherwise the pure-Python
loops take over. Both produce identical floating-point results.
"""
from __future__ import annotations

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

DEFAULT_BACKEND = "compiled" if _compiled is not None else "python"


def _module(backend):
    name = backend or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}") from None


def _controls(alphas, betas):
    al = np.ascontiguousarray(alphas, dtype=np.float64)
    be = np.ascontiguousarray(betas, dtype=np.float64)
    if al.ndim != 1 or al.shape != be.shape:
        raise ValueError("control arrays must be 1-D and of equal length")
    return al, be


def orbit(params, x0, y0, alphas, betas, backend=None):
    """Return the (n+1, 2) array of states under the given control arrays."""
    al, be = _controls(alphas, betas)
    out = np.empty((al.shape[0] + 1, 2), dtype=np.float64)
    _module(backend).orbit(params.r, params.s, params.a, params.b,
                           float(x0), float(y0), al, be, out)
    return out


def orbit_tail(params, x0, y0, alphas, betas, keep, center, radius, backend=None):
    """Iterate without storing the full orbit.

    Returns ``(tail, entry)``: the last ``keep`` states in time order and the
    first index whose Euclidean distance to ``center`` is below ``radius``
    (``None`` if that never happens).
    """
    al, be = _controls(alphas, betas)
    if keep < 1:
        raise ValueError("keep must be at least 1")
    ring = np.zeros((keep, 2), dtype=np.float64)
    entry = _module(backend).orbit_tail(
        params.r, params.s, params.a, params.b, float(x0), float(y0), al, be,
        float(center[0]), float(center[1]), float(radius) ** 2, ring)
    total = al.shape[0] + 1
    if total <= keep:
        tail = ring[:total].copy()
    else:
        start = total % keep
        tail = np.concatenate([ring[start:], ring[:start]])
    return tail, (None if entry < 0 else int(entry))
