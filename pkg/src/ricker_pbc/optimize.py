"""Bracketed 1-D minimisation used for domain edges and descent floors."""
from __future__ import annotations

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimise ``f`` on ``[lo, hi]``; returns ``(x, f(x))``.

    Assumes unimodality on the bracket. The endpoints are compared against
    the interior result so a monotone ``f`` still returns its true minimum.
    """
    if hi < lo:
        lo, hi = hi, lo
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    best_x, best_f = (c, fc) if fc <= fd else (d, fd)
    for x in (lo, hi):
        fx = f(x)
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def scan_golden_min(f, lo: float, hi: float, n_scan: int = 256, tol: float = 1e-10):
    """Grid scan to locate the best cell, then golden-section inside it.

    ``f`` must accept numpy arrays for the scan.
    """
    xs = np.linspace(lo, hi, n_scan)
    vals = np.asarray(f(xs), dtype=np.float64)
    i = int(np.argmin(vals))
    a = xs[max(i - 1, 0)]
    b = xs[min(i + 1, n_scan - 1)]
    x, fx = golden_section_min(lambda t: float(f(t)), a, b, tol=tol)
    if vals[i] < fx:
        return float(xs[i]), float(vals[i])
    return float(x), float(fx)
