"""Quadratic Lyapunov function, its one-step decrement under control, and the
hitting-time bound it yields outside a ball around the equilibrium."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .invariant import entry_thresholds, invariant_domain, lower_edges, sample_points
from .model import ControlBounds, ModelParams, equilibrium, pbc_image, random_schedule, simulate
from .optimize import golden_section_min


def lyapunov_value(params: ModelParams, x, y):
    """``V = b x^2 + a y^2 + 2ab xy - 2rb x - 2sa y`` (vectorised)."""
    r, s, a, b = params.r, params.s, params.a, params.b
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return b * x * x + a * y * y + 2.0 * a * b * x * y - 2.0 * r * b * x - 2.0 * s * a * y


def residuals(params: ModelParams, x, y):
    """Log-growth residuals ``X = r - x - a y`` and ``Y = s - b x - y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return params.r - x - params.a * y, params.s - params.b * x - y


def lyapunov_increment(params: ModelParams, alpha, beta, x, y):
    """``V(T(x, y)) - V(x, y)``.

    Written in terms of the displacements ``dx = x(1-alpha)(e^X - 1)`` and
    ``dy``, which is the same polynomial identity as the composition but
    free of the cancellation between two values of ``V`` near the minimum.
    """
    a, b = params.a, params.b
    X, Y = residuals(params, x, y)
    dx = np.asarray(x, dtype=np.float64) * (1.0 - alpha) * np.expm1(X)
    dy = np.asarray(y, dtype=np.float64) * (1.0 - beta) * np.expm1(Y)
    return b * dx * dx + a * dy * dy + 2.0 * a * b * dx * dy - 2.0 * b * dx * X - 2.0 * a * dy * Y


def lyapunov_increment_composed(params: ModelParams, alpha, beta, x, y):
    xn, yn = pbc_image(params, alpha, beta, x, y)
    return lyapunov_value(params, xn, yn) - lyapunov_value(params, x, y)


def phi_psi(sigma, u, t):
    """``Phi = (1-sigma)(1-e^u)(t-u) + 2u`` and ``Psi = (1-sigma)(e^u-1) Phi``."""
    em1 = np.expm1(u)
    phi = (1.0 - sigma) * (-em1) * (t - u) + 2.0 * u
    return phi, (1.0 - sigma) * em1 * phi


def descent_bound(params: ModelParams, alpha, beta, x, y):
    """Upper bound ``-b x Psi(alpha, X, r) - a y Psi(beta, Y, s)`` on the increment."""
    X, Y = residuals(params, x, y)
    _, px = phi_psi(alpha, X, params.r)
    _, py = phi_psi(beta, Y, params.s)
    return -params.b * np.asarray(x) * px - params.a * np.asarray(y) * py


@dataclass(frozen=True)
class GlobalFloors:
    rho1: float
    rho2: float
    eta1: float
    eta2: float


def _floor_rate(t: float) -> float:
    e = math.exp(t - 2.0)
    return (e - 1.0) / (1.0 + e)


def global_floors(params: ModelParams) -> GlobalFloors:
    """Control floors above which ``V`` strictly decreases along orbits.

    ``eta`` also needs the entry thresholds, which exist only for ``r, s > 2``;
    otherwise they are taken as 0.
    """
    rho1, rho2 = _floor_rate(params.r), _floor_rate(params.s)
    if params.unstable_regime:
        thr = entry_thresholds(params)
        at, bt = thr.alpha_tilde, thr.beta_tilde
    else:
        at = bt = 0.0
    return GlobalFloors(rho1, rho2, max(at, rho1), max(bt, rho2))


def residual_bound(params: ModelParams) -> float:
    """``H`` with ``|X|, |Y| <= H`` on ``[0, e^{r-1}] x [0, e^{s-1}]``.

    Both residuals are affine, so the corners ``(0, 0)`` and
    ``(e^{r-1}, e^{s-1})`` attain the extremes.
    """
    r, s, a, b = params.r, params.s, params.a, params.b
    er, es = math.exp(r - 1.0), math.exp(s - 1.0)
    return max(r, er + a * es - r, s, es + b * er - s)


def lyapunov_sup(params: ModelParams) -> float:
    """``max |V|`` over ``[0, e^{r-1}] x [0, e^{s-1}]``.

    The only interior critical point is K; on each edge ``V`` is a quadratic in
    one variable, so the candidates are K, the corners and the edge vertices.
    """
    r, s, a, b = params.r, params.s, params.a, params.b
    X, Y = math.exp(r - 1.0), math.exp(s - 1.0)
    cand = [tuple(equilibrium(params)), (0.0, 0.0), (X, 0.0), (0.0, Y), (X, Y)]
    for xc, yc in ((r, 0.0), (r - a * Y, Y)):
        if 0.0 < xc < X:
            cand.append((xc, yc))
    for xc, yc in ((0.0, s), (X, s - b * X)):
        if 0.0 < yc < Y:
            cand.append((xc, yc))
    pts = np.array(cand)
    return float(np.abs(lyapunov_value(params, pts[:, 0], pts[:, 1])).max())


def psi_floor(sigma_lo: float, sigma_hi: float, u_lo: float, u_hi: float, t: float,
              n_sigma: int = 128, n_u: int = 512, n_refine: int = 5, tol: float = 1e-10) -> float:
    """Minimum of ``Psi(sigma, u, t)`` over ``sigma in [lo, hi]`` and
    ``u_lo <= |u| <= u_hi``.

    A ``n_sigma x n_u`` grid (half the ``u`` points on each sign) locates the
    best cells; the lowest ``n_refine`` are polished by alternating golden
    searches along each coordinate inside the cell.
    """
    if not 0.0 < u_lo < u_hi:
        raise ValueError("need 0 < u_lo < u_hi")
    sig = np.linspace(sigma_lo, sigma_hi, n_sigma) if sigma_hi > sigma_lo else np.array([sigma_lo])
    half = np.linspace(u_lo, u_hi, n_u // 2)
    us = np.concatenate([-half[::-1], half])
    S, U = np.meshgrid(sig, us, indexing="ij")
    _, vals = phi_psi(S, U, t)
    flat = vals.ravel()
    order = np.argsort(flat, kind="stable")[:n_refine]
    best = float(flat[order[0]])
    nu = us.shape[0]
    for k in order:
        i, j = divmod(int(k), nu)
        s_lo, s_hi = sig[max(i - 1, 0)], sig[min(i + 1, sig.shape[0] - 1)]
        # stay on the sign branch of the cell
        if us[j] < 0.0:
            u_a = us[max(j - 1, 0)]
            u_b = us[min(j + 1, n_u // 2 - 1)]
        else:
            u_a = us[max(j - 1, n_u // 2)]
            u_b = us[min(j + 1, nu - 1)]
        s_cur, u_cur = float(S[i, j]), float(U[i, j])
        for _ in range(4):
            u_cur, _ = golden_section_min(lambda v: float(phi_psi(s_cur, v, t)[1]), u_a, u_b, tol)
            s_cur, f = golden_section_min(lambda v: float(phi_psi(v, u_cur, t)[1]), s_lo, s_hi, tol)
        best = min(best, f)
    return best


@dataclass(frozen=True)
class DescentFloor:
    delta0: float
    rho0: float
    residual_threshold: float
    residual_bound: float
    psi_floor: float
    c_bold: float
    Mbar: float
    S: int


def descent_floor(params: ModelParams, delta0: float, alpha_lo: float, alpha_hi: float,
                  beta_lo: float, beta_hi: float) -> DescentFloor:
    """Per-step Lyapunov decrement outside ``B(K, delta0)`` and the step bound ``S``.

    Outside the ball at least one residual satisfies ``|X| >= rho0 / 2`` with
    ``rho0 = delta0 (1 - ab) / 2``, so ``Psi`` is minimised over residuals in
    ``[rho0 / 2, H]``. The smaller coordinate is at least ``c_bold`` inside
    the invariant rectangle, hence each step outside the ball lowers ``V`` by
    at least ``min(a, b) c_bold psi_floor``; ``V`` spans at most ``2 Mbar``.
    """
    if not delta0 > 0.0:
        raise ValueError("delta0 must be positive")
    fl = global_floors(params)
    if not (fl.rho1 <= alpha_lo <= alpha_hi < 1.0 and fl.rho2 <= beta_lo <= beta_hi < 1.0):
        raise ValueError(f"control box must lie above the floors ({fl.rho1}, {fl.rho2})")
    ab = params.a * params.b
    rho0 = delta0 * (1.0 - ab) / 2.0
    H = residual_bound(params)
    thr = rho0 / 2.0
    if thr >= H:
        raise ValueError(f"delta0 = {delta0} is beyond the residual range")
    psi = min(psi_floor(alpha_lo, alpha_hi, thr, H, params.r),
              psi_floor(beta_lo, beta_hi, thr, H, params.s))
    if psi < 1e-300:
        raise ValueError(f"descent floor underflows ({psi}); delta0 = {delta0} is too small")
    e = lower_edges(params, alpha_lo, beta_lo)
    c_bold = min(e.uc1, e.uc2)
    Mbar = lyapunov_sup(params)
    S = math.floor(2.0 * Mbar / (min(params.a, params.b) * c_bold * psi)) + 1
    return DescentFloor(delta0, rho0, thr, H, psi, c_bold, Mbar, S)


# ---------------------------------------------------------------- sampling checks

@dataclass(frozen=True)
class DescentReport:
    n_states: int
    n_controls: int
    increase_violations: int
    chain_violations: int
    strict_violations: int
    worst_point: Optional[tuple]
    worst_control: Optional[tuple]
    worst_value: float

    @property
    def violations(self) -> int:
        return self.increase_violations + self.chain_violations + self.strict_violations

    @property
    def ok(self) -> bool:
        return self.violations == 0


def random_states(params: ModelParams, n: int, seed: int) -> np.ndarray:
    """Uniform positive states in ``(0, e^{r-1}] x (0, e^{s-1}]``, the set every
    orbit occupies after one step."""
    rng = np.random.Generator(np.random.Philox(seed))
    u = 1.0 - rng.random((n, 2))
    return u * np.array([math.exp(params.r - 1.0), math.exp(params.s - 1.0)])


def check_descent(params: ModelParams, alpha_lo: float, alpha_hi: float, beta_lo: float,
                  beta_hi: float, n_states: int = 100_000, seed: int = 0, n_controls: int = 3,
                  atol: float = 1e-10, strict_radius: float = 1e-6, states=None) -> DescentReport:
    """Sample ``dV <= -b x Psi - a y Psi <= 0`` and ``dV < 0`` away from K."""
    bounds = ControlBounds(alpha_lo, alpha_hi, beta_lo, beta_hi)
    pts = random_states(params, n_states, seed) if states is None else np.atleast_2d(np.asarray(states, float))
    x, y = pts[:, 0], pts[:, 1]
    K = np.array(equilibrium(params))
    far = np.abs(pts - K).max(axis=1) > strict_radius
    al = np.linspace(bounds.alpha_lo, bounds.alpha_hi, n_controls)
    be = np.linspace(bounds.beta_lo, bounds.beta_hi, n_controls)
    inc = chain = strict = 0
    worst = (None, None, -math.inf)
    for alpha in al:
        for beta in be:
            dv = lyapunov_increment(params, alpha, beta, x, y)
            bound = descent_bound(params, alpha, beta, x, y)
            up = dv > atol
            ch = dv > bound + atol
            bd = bound > atol
            st = far & (dv >= 0.0)
            inc += int(up.sum())
            chain += int((ch | bd).sum())
            strict += int((st & ~up).sum())
            i = int(np.argmax(dv))
            if dv[i] > worst[2]:
                worst = ((float(x[i]), float(y[i])), (float(alpha), float(beta)), float(dv[i]))
    return DescentReport(pts.shape[0], n_controls * n_controls, inc, chain, strict, *worst)


@dataclass(frozen=True)
class HittingReport:
    starts: int
    horizon: int
    max_outside: int
    mean_outside: float
    bound: int

    @property
    def ok(self) -> bool:
        return self.max_outside <= self.bound


def steps_outside_ball(params: ModelParams, delta0: float, alpha_lo: float, alpha_hi: float,
                       beta_lo: float, beta_hi: float, n_starts: int = 100, horizon: int = 2000,
                       seed: int = 0, bound: Optional[int] = None) -> HittingReport:
    """Count steps spent outside ``B(K, delta0)`` from starts in ``D_{alpha_lo, beta_lo}``
    under i.i.d. uniform controls in the box."""
    cbounds = ControlBounds(alpha_lo, alpha_hi, beta_lo, beta_hi)
    rect = invariant_domain(params, alpha_lo, beta_lo)
    starts = sample_points(rect, max(n_starts - 8, 0), seed)[:n_starts]
    K = np.array(equilibrium(params))
    counts = []
    for k, st in enumerate(starts):
        sched = random_schedule(cbounds, horizon, seed=[seed, k])
        traj = simulate(params, sched, st, horizon)
        dist = np.sqrt(((traj.states - K) ** 2).sum(axis=1))
        counts.append(int((dist >= delta0).sum()))
    if bound is None:
        bound = descent_floor(params, delta0, alpha_lo, alpha_hi, beta_lo, beta_hi).S
    return HittingReport(len(counts), horizon, max(counts), float(np.mean(counts)), bound)
