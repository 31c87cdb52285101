"""Pure-Python orbit loops, used when the compiled extension is unavailable."""
import math


def orbit(r, s, a, b, x, y, alphas, betas, out):
    exp = math.exp
    out[0, 0] = x
    out[0, 1] = y
    for i, (al, be) in enumerate(zip(alphas.tolist(), betas.tolist())):
        xn = x * ((1.0 - al) * exp(r - x - a * y) + al)
        y = y * ((1.0 - be) * exp(s - b * x - y) + be)
        x = xn
        out[i + 1, 0] = x
        out[i + 1, 1] = y


def orbit_tail(r, s, a, b, x, y, alphas, betas, px, py, radius_sq, ring):
    exp = math.exp
    k = ring.shape[0]
    buf = [None] * k
    buf[0] = (x, y)
    dx = x - px
    dy = y - py
    entry = 0 if dx * dx + dy * dy < radius_sq else -1
    for i, (al, be) in enumerate(zip(alphas.tolist(), betas.tolist())):
        xn = x * ((1.0 - al) * exp(r - x - a * y) + al)
        y = y * ((1.0 - be) * exp(s - b * x - y) + be)
        x = xn
        buf[(i + 1) % k] = (x, y)
        if entry < 0:
            dx = x - px
            dy = y - py
            if dx * dx + dy * dy < radius_sq:
                entry = i + 1
    for slot, state in enumerate(buf):
        if state is not None:
            ring[slot, 0] = state[0]
            ring[slot, 1] = state[1]
    return entry
