"""Invariant rectangles of the controlled map, bounded away from the axes.

For controls above the entry thresholds the rectangle
``[uc1 - h, calH1] x [uc2 - h, calH2]`` is mapped into itself, and any
positive orbit enters it after a bounded number of steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq
from scipy.stats import qmc

from .model import ControlBounds, ModelParams, check_control, equilibrium, pbc_image
from .optimize import scan_golden_min


@dataclass(frozen=True)
class Rect:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (0.0 < self.x_lo < self.x_hi and 0.0 < self.y_lo < self.y_hi):
            raise ValueError(f"degenerate rectangle {self}")

    def contains(self, x, y, slack: float = 0.0):
        x = np.asarray(x)
        y = np.asarray(y)
        return ((x >= self.x_lo - slack) & (x <= self.x_hi + slack)
                & (y >= self.y_lo - slack) & (y <= self.y_hi + slack))

    def corners(self) -> np.ndarray:
        return np.array([[self.x_lo, self.y_lo], [self.x_hi, self.y_lo],
                         [self.x_lo, self.y_hi], [self.x_hi, self.y_hi]])

    def edge_midpoints(self) -> np.ndarray:
        xm = 0.5 * (self.x_lo + self.x_hi)
        ym = 0.5 * (self.y_lo + self.y_hi)
        return np.array([[xm, self.y_lo], [xm, self.y_hi], [self.x_lo, ym], [self.x_hi, ym]])

    def scale(self, u: np.ndarray) -> np.ndarray:
        """Map points of the unit square into the rectangle."""
        lo = np.array([self.x_lo, self.y_lo])
        hi = np.array([self.x_hi, self.y_hi])
        return lo + u * (hi - lo)

    @property
    def diameter(self) -> float:
        return math.hypot(self.x_hi - self.x_lo, self.y_hi - self.y_lo)


# ---------------------------------------------------------------- upper caps

def _peak_location(t: float, c: float) -> float:
    """Interior maximiser of ``z[(1-c) e^{t-z} + c]`` on (1, 2)."""
    return brentq(lambda z: (1.0 - c) * math.exp(t - z) * (1.0 - z) + c, 1.0, 2.0, xtol=1e-14)


@dataclass(frozen=True)
class UpperCaps:
    alpha: float
    beta: float
    H1: float
    calH1: float
    H2: float
    calH2: float
    alpha1: float
    alpha2: Optional[float]
    beta1: float
    beta2: Optional[float]
    x_monotone: bool
    y_monotone: bool
    x_peak: Optional[float]
    y_peak: Optional[float]


def _cap_constants(t: float):
    et2 = math.exp(t - 2.0)
    first = et2 / (et2 + 1.0)
    et1 = math.exp(t - 1.0)
    second = (et1 - t) / (et1 - 2.0) if t > 2.0 else None
    return first, second


def upper_caps(params: ModelParams, alpha: float, beta: float) -> UpperCaps:
    """Caps ``calH1(alpha)``, ``calH2(beta)`` on the long-run state.

    ``x_monotone`` reports whether ``x -> x[(1-alpha) e^{r-x} + alpha]`` is
    increasing (``alpha >= alpha1``); otherwise ``x_peak`` is its interior
    maximiser in (1, 2). Likewise for ``y``.
    """
    check_control(alpha, beta)
    r, s = params.r, params.s
    H1 = (1.0 - alpha) * math.exp(r - 1.0) + 2.0 * alpha
    H2 = (1.0 - beta) * math.exp(s - 1.0) + 2.0 * beta
    alpha1, alpha2 = _cap_constants(r)
    beta1, beta2 = _cap_constants(s)
    x_mono = alpha >= alpha1
    y_mono = beta >= beta1
    return UpperCaps(
        alpha, beta, H1, max(H1, r), H2, max(H2, s), alpha1, alpha2, beta1, beta2,
        x_mono, y_mono,
        None if x_mono else _peak_location(r, alpha),
        None if y_mono else _peak_location(s, beta),
    )


@dataclass(frozen=True)
class EntryThresholds:
    alpha_tilde: float
    beta_tilde: float
    alpha2: float
    beta2: float


def entry_thresholds(params: ModelParams) -> EntryThresholds:
    """Smallest controls for which the lower rectangle edges are positive."""
    if not params.unstable_regime:
        raise ValueError("entry thresholds are defined for r > 2 and s > 2")
    r, s, a, b = params.r, params.s, params.a, params.b
    er, es = math.exp(r - 1.0), math.exp(s - 1.0)
    alpha_tilde = max((er - s / b) / (er - 2.0), 0.0)
    beta_tilde = max((es - r / a) / (es - 2.0), 0.0)
    return EntryThresholds(alpha_tilde, beta_tilde, (er - r) / (er - 2.0), (es - s) / (es - 2.0))


# ---------------------------------------------------------------- lower edges

@dataclass(frozen=True)
class LowerEdges:
    alpha: float
    beta: float
    calH1: float
    calH2: float
    c1: float
    c2: float
    u1: float
    u2: float
    uc1: float
    uc2: float


def lower_edges(params: ModelParams, alpha: float, beta: float) -> LowerEdges:
    thr = entry_thresholds(params)
    if not alpha > thr.alpha_tilde:
        raise ValueError(f"alpha = {alpha} must exceed the entry threshold {thr.alpha_tilde}")
    if not beta > thr.beta_tilde:
        raise ValueError(f"beta = {beta} must exceed the entry threshold {thr.beta_tilde}")
    caps = upper_caps(params, alpha, beta)
    r, s, a, b = params.r, params.s, params.a, params.b
    H1, H2 = caps.calH1, caps.calH2
    c1 = r - a * H2
    c2 = s - b * H1
    # u e^{-u} is unimodal, so its minimum over an interval sits at an endpoint
    u1 = min(c1 * math.exp(-c1), H1 * math.exp(-H1))
    u2 = min(c2 * math.exp(-c2), H2 * math.exp(-H2))

    # the image decreases in the other coordinate, so the worst case is at its cap
    def fx(x):
        return x * ((1.0 - alpha) * np.exp(r - x - a * H2) + alpha)

    def fy(y):
        return y * ((1.0 - beta) * np.exp(s - b * H1 - y) + beta)

    _, m1 = scan_golden_min(fx, c1, H1)
    _, m2 = scan_golden_min(fy, c2, H2)
    return LowerEdges(alpha, beta, H1, H2, c1, c2, u1, u2, min(m1, c1), min(m2, c2))


def invariant_domain(params: ModelParams, alpha: float, beta: float, h: float = 0.0) -> Rect:
    e = lower_edges(params, alpha, beta)
    if not 0.0 <= h < min(e.uc1, e.uc2):
        raise ValueError(f"h must lie in [0, {min(e.uc1, e.uc2)}), got {h}")
    return Rect(e.uc1 - h, e.calH1, e.uc2 - h, e.calH2)


# ---------------------------------------------------------------- entrance time

@dataclass(frozen=True)
class EntranceBound:
    descent_x: int
    descent_y: int
    climb_x: int
    climb_y: int
    x_floor: float
    y_floor: float

    @property
    def steps(self) -> int:
        return max(self.descent_x, self.descent_y) + max(self.climb_x, self.climb_y)


def entrance_bound_terms(params: ModelParams, state0, alpha_lo: float, alpha_hi: float,
                         beta_lo: float, beta_hi: float, h: float) -> EntranceBound:
    """Step counts after which every admissible orbit lies in ``D(h)``.

    Descent: while ``x > calH1`` each step lowers ``x`` by at least
    ``(1-alpha_hi) calH1 (1 - e^{r-calH1})``. Climb: while ``x < uc1 - h``
    (and both caps hold) each step raises ``x`` by at least
    ``x_floor (1-alpha_hi)(e^h - 1)``. ``x_floor`` is a lower bound on ``x``
    over the whole orbit: one crossing step below ``calH1`` and at most
    ``descent_y`` further steps while ``y`` is still above its cap, each
    shrinking ``x`` by no more than the factor
    ``(1-alpha_lo) e^{r - X - aY} + alpha_lo`` with ``X, Y`` the running maxima.
    """
    x0, y0 = float(state0[0]), float(state0[1])
    if not (x0 > 0.0 and y0 > 0.0):
        raise ValueError("start must be strictly positive")
    thr = entry_thresholds(params)
    if not (thr.alpha_tilde < alpha_lo <= alpha_hi < 1.0):
        raise ValueError(f"need {thr.alpha_tilde} < alpha_lo <= alpha_hi < 1")
    if not (thr.beta_tilde < beta_lo <= beta_hi < 1.0):
        raise ValueError(f"need {thr.beta_tilde} < beta_lo <= beta_hi < 1")
    if h <= 0.0:
        raise ValueError("h must be positive: the climb increment vanishes at h = 0")
    e = lower_edges(params, alpha_lo, beta_lo)
    if h >= min(e.uc1, e.uc2):
        raise ValueError(f"h must be below {min(e.uc1, e.uc2)}")
    r, s, a, b = params.r, params.s, params.a, params.b
    H1, H2 = e.calH1, e.calH2

    def descent(v0, cap, t, hi):
        if v0 <= cap:
            return 0
        step = (1.0 - hi) * cap * (1.0 - math.exp(t - cap))
        if step <= 0.0:
            raise ValueError("cap equals the growth rate; no finite descent bound")
        return math.floor((v0 - cap) / step) + 1

    mx = descent(x0, H1, r, alpha_hi)
    my = descent(y0, H2, s, beta_hi)
    X, Y = max(x0, H1), max(y0, H2)
    kx = (1.0 - alpha_lo) * math.exp(r - X - a * Y) + alpha_lo
    ky = (1.0 - beta_lo) * math.exp(s - b * X - Y) + beta_lo
    x_floor = min(x0, kx * H1, e.uc1) * kx ** my
    y_floor = min(y0, ky * H2, e.uc2) * ky ** mx

    def climb(floor, edge, hi):
        target = edge - h
        if floor >= target:
            return 0
        step = floor * (1.0 - hi) * math.expm1(h)
        return math.floor((target - floor) / step) + 1

    return EntranceBound(mx, my, climb(x_floor, e.uc1, alpha_hi), climb(y_floor, e.uc2, beta_hi),
                         x_floor, y_floor)


def entrance_bound(params: ModelParams, state0, alpha_lo: float, alpha_hi: float,
                   beta_lo: float, beta_hi: float, h: float) -> int:
    return entrance_bound_terms(params, state0, alpha_lo, alpha_hi, beta_lo, beta_hi, h).steps


# ---------------------------------------------------------------- sampling checks

@dataclass(frozen=True)
class InvarianceReport:
    n_points: int
    n_controls: int
    violations: int
    worst_excess: float
    worst_point: Optional[tuple]
    worst_control: Optional[tuple]

    @property
    def ok(self) -> bool:
        return self.violations == 0


def sample_points(rect: Rect, n_samples: int, seed: int) -> np.ndarray:
    """Scrambled Halton points in ``rect`` plus its corners and edge midpoints."""
    pts = [rect.corners(), rect.edge_midpoints()]
    if n_samples > 0:
        u = qmc.Halton(d=2, scramble=True, seed=np.random.default_rng(seed)).random(n_samples)
        pts.append(rect.scale(u))
    return np.vstack(pts)


def _control_grid(bounds: ControlBounds, n: int):
    al = np.linspace(bounds.alpha_lo, bounds.alpha_hi, n) if n > 1 else np.array([bounds.alpha_lo])
    be = np.linspace(bounds.beta_lo, bounds.beta_hi, n) if n > 1 else np.array([bounds.beta_lo])
    return [(float(x), float(y)) for x in al for y in be]


def check_invariance(params: ModelParams, rect: Rect, alpha_lo: float, alpha_hi: float,
                     beta_lo: float, beta_hi: float, n_samples: int = 10_000, seed: int = 0,
                     n_controls: int = 3, points=None, rtol: float = 1e-12) -> InvarianceReport:
    """Count sample images under the control grid that leave ``rect``.

    A relative slack of ``rtol`` absorbs last-digit rounding on the edges.
    """
    bounds = ControlBounds(alpha_lo, alpha_hi, beta_lo, beta_hi)
    pts = sample_points(rect, n_samples, seed) if points is None else np.atleast_2d(np.asarray(points, float))
    controls = _control_grid(bounds, n_controls)
    slack = rtol * max(rect.x_hi, rect.y_hi)
    violations = 0
    worst = (0.0, None, None)
    for alpha, beta in controls:
        xn, yn = pbc_image(params, alpha, beta, pts[:, 0], pts[:, 1])
        excess = np.maximum.reduce([rect.x_lo - xn, xn - rect.x_hi, rect.y_lo - yn, yn - rect.y_hi])
        bad = excess > slack
        violations += int(bad.sum())
        if bad.any():
            i = int(np.argmax(excess))
            if excess[i] > worst[0]:
                worst = (float(excess[i]), (float(pts[i, 0]), float(pts[i, 1])), (alpha, beta))
    return InvarianceReport(pts.shape[0], len(controls), violations, *worst)


def _threshold_grid(lo: float, n: int, top: float = 0.95):
    return [lo + (top - lo) * (k + 1) / (n + 1) for k in range(n)]


@dataclass(frozen=True)
class NestedReport:
    pairs: int
    violations: int
    worst: Optional[dict]

    @property
    def ok(self) -> bool:
        return self.violations == 0


def check_nested_invariance(params: ModelParams, n_grid: int = 5, n_samples: int = 2_000,
                            seed: int = 0) -> NestedReport:
    """For grid pairs ``(a1, b1) >= (a2, b2)``, ``T_{a1,b1}`` must keep ``D_{a2,b2}``."""
    thr = entry_thresholds(params)
    alphas = _threshold_grid(thr.alpha_tilde, n_grid)
    betas = _threshold_grid(thr.beta_tilde, n_grid)
    pairs = violations = 0
    worst = None
    for i, a2 in enumerate(alphas):
        for j, b2 in enumerate(betas):
            rect = invariant_domain(params, a2, b2)
            pts = sample_points(rect, n_samples, seed)
            for a1 in alphas[i:]:
                for b1 in betas[j:]:
                    rep = check_invariance(params, rect, a1, a1, b1, b1, points=pts, n_controls=1)
                    pairs += 1
                    violations += rep.violations
                    if rep.violations and (worst is None or rep.worst_excess > worst["excess"]):
                        worst = {"domain": (a2, b2), "control": (a1, b1),
                                 "point": rep.worst_point, "excess": rep.worst_excess}
    return NestedReport(pairs, violations, worst)


def fixed_point_in(params: ModelParams, rect: Rect) -> bool:
    p, q = equilibrium(params)
    return bool(rect.contains(p, q))


@dataclass(frozen=True)
class CapReport:
    n_points: int
    cap_violations: int
    ceiling_violations: int

    @property
    def ok(self) -> bool:
        return self.cap_violations == 0 and self.ceiling_violations == 0


def check_caps(params: ModelParams, alpha_lo: float, alpha_hi: float, beta_lo: float,
               beta_hi: float, n_samples: int = 10_000, seed: int = 0, n_controls: int = 3,
               ceiling: float = 1.5) -> CapReport:
    """Images of ``[0, calH1] x [0, calH2]`` stay under the caps of ``(alpha_lo, beta_lo)``;
    above the cap, a coordinate in ``(calH, ceiling * calH]`` maps below ``ceiling * calH``."""
    bounds = ControlBounds(alpha_lo, alpha_hi, beta_lo, beta_hi)
    caps = upper_caps(params, alpha_lo, beta_lo)
    H1, H2 = caps.calH1, caps.calH2
    u = qmc.Halton(d=2, scramble=True, seed=np.random.default_rng(seed)).random(n_samples)
    inner = u * np.array([H1, H2])
    slack = 1e-12 * max(H1, H2)
    cap_bad = ceil_bad = 0
    for alpha, beta in _control_grid(bounds, n_controls):
        xn, yn = pbc_image(params, alpha, beta, inner[:, 0], inner[:, 1])
        cap_bad += int(((xn > H1 + slack) | (yn > H2 + slack)).sum())
        # x above its cap with y anywhere below its cap, and the mirror case
        xo = H1 + u[:, 0] * (ceiling - 1.0) * H1
        xn, _ = pbc_image(params, alpha, beta, xo, inner[:, 1])
        yo = H2 + u[:, 1] * (ceiling - 1.0) * H2
        _, yn = pbc_image(params, alpha, beta, inner[:, 0], yo)
        ceil_bad += int((xn >= ceiling * H1).sum() + (yn >= ceiling * H2).sum())
    return CapReport(n_samples, cap_bad, ceil_bad)
