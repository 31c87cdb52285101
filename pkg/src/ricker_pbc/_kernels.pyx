# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled orbit loops for the controlled Ricker map.

Arithmetic is written in the same order as ``_kernels_py`` so both backends
produce identical doubles.
"""
from libc.math cimport exp


def orbit(double r, double s, double a, double b, double x, double y,
          const double[::1] alphas, const double[::1] betas,
          double[:, ::1] out):
    cdef Py_ssize_t n = alphas.shape[0]
    cdef Py_ssize_t i
    cdef double al, be, xn
    out[0, 0] = x
    out[0, 1] = y
    for i in range(n):
        al = alphas[i]
        be = betas[i]
        xn = x * ((1.0 - al) * exp(r - x - a * y) + al)
        y = y * ((1.0 - be) * exp(s - b * x - y) + be)
        x = xn
        out[i + 1, 0] = x
        out[i + 1, 1] = y


def orbit_tail(double r, double s, double a, double b, double x, double y,
               const double[::1] alphas, const double[::1] betas,
               double px, double py, double radius_sq,
               double[:, ::1] ring):
    """Iterate, keeping states in a ring buffer; return first entry index or -1."""
    cdef Py_ssize_t n = alphas.shape[0]
    cdef Py_ssize_t k = ring.shape[0]
    cdef Py_ssize_t i, slot
    cdef Py_ssize_t entry = -1
    cdef double al, be, xn, dx, dy
    ring[0, 0] = x
    ring[0, 1] = y
    dx = x - px
    dy = y - py
    if dx * dx + dy * dy < radius_sq:
        entry = 0
    for i in range(n):
        al = alphas[i]
        be = betas[i]
        xn = x * ((1.0 - al) * exp(r - x - a * y) + al)
        y = y * ((1.0 - be) * exp(s - b * x - y) + be)
        x = xn
        slot = (i + 1) % k
        ring[slot, 0] = x
        ring[slot, 1] = y
        if entry < 0:
            dx = x - px
            dy = y - py
            if dx * dx + dy * dy < radius_sq:
                entry = i + 1
    return entry
