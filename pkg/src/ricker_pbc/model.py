"""Planar Ricker competition map with prediction-based control.

The controlled map is

    x' = x[(1-alpha) exp(r - x - a y) + alpha]
    y' = y[(1-beta)  exp(s - b x - y) + beta]

which is the convex combination of the current state and the uncontrolled
Ricker image. All control schedules share a bounded-box contract so callers
can reason about the worst case of any schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import kernels

MAX_RATE = 50.0


class ParameterError(ValueError):
    """Raised when model parameters violate the coexistence conditions."""


class PlanarState(NamedTuple):
    x: float
    y: float


class Equilibrium(NamedTuple):
    p: float
    q: float


@dataclass(frozen=True)
class ModelParams:
    """Growth rates ``r, s`` and competition coefficients ``a, b``.

    Construction validates ``0 < a, b < 1``, ``r > a s`` and ``s > b r``,
    which together guarantee a unique positive equilibrium.
    """

    r: float
    s: float
    a: float
    b: float

    def __post_init__(self):
        for name in ("r", "s", "a", "b"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ParameterError(f"{name} must be a finite number, got {value!r}")
            object.__setattr__(self, name, float(value))
        r, s, a, b = self.r, self.s, self.a, self.b
        if not 0.0 < a < 1.0:
            raise ParameterError(f"0 < a < 1 fails (a = {a})")
        if not 0.0 < b < 1.0:
            raise ParameterError(f"0 < b < 1 fails (b = {b})")
        if not r > a * s:
            raise ParameterError(f"r > a*s fails ({r} <= {a * s})")
        if not s > b * r:
            raise ParameterError(f"s > b*r fails ({s} <= {b * r})")
        if r > MAX_RATE or s > MAX_RATE:
            raise ParameterError(f"growth rates are capped at {MAX_RATE} (r = {r}, s = {s})")

    @property
    def r_above_two(self) -> bool:
        return self.r > 2.0

    @property
    def s_above_two(self) -> bool:
        return self.s > 2.0

    @property
    def unstable_regime(self) -> bool:
        """True when both rates exceed 2, where the uncontrolled map can cycle."""
        return self.r > 2.0 and self.s > 2.0

    @classmethod
    def from_equilibrium(cls, p: float, q: float, a: float, b: float) -> "ModelParams":
        """Build parameters whose positive equilibrium is ``(p, q)``."""
        return cls(p + a * q, q + b * p, a, b)


def validate_params(r: float, s: float, a: float, b: float) -> ModelParams:
    return ModelParams(r, s, a, b)


def equilibrium(params: ModelParams) -> Equilibrium:
    d = 1.0 - params.a * params.b
    return Equilibrium((params.r - params.a * params.s) / d,
                       (params.s - params.b * params.r) / d)


def check_control(alpha: float, beta: float) -> None:
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if not (0.0 <= beta < 1.0):
        raise ValueError(f"beta must lie in [0, 1), got {beta}")


def pbc_step(params: ModelParams, alpha: float, beta: float, state) -> PlanarState:
    """One step of the controlled map from ``state = (x, y)``."""
    check_control(alpha, beta)
    x, y = float(state[0]), float(state[1])
    if x < 0.0 or y < 0.0:
        raise ValueError(f"state must be nonnegative, got ({x}, {y})")
    r, s, a, b = params.r, params.s, params.a, params.b
    xn = x * ((1.0 - alpha) * math.exp(r - x - a * y) + alpha)
    yn = y * ((1.0 - beta) * math.exp(s - b * x - y) + beta)
    return PlanarState(xn, yn)


def pbc_image(params: ModelParams, alpha, beta, x, y):
    """Vectorised controlled image; ``alpha``/``beta`` broadcast against ``x``/``y``."""
    r, s, a, b = params.r, params.s, params.a, params.b
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xn = x * ((1.0 - alpha) * np.exp(r - x - a * y) + alpha)
    yn = y * ((1.0 - beta) * np.exp(s - b * x - y) + beta)
    return xn, yn


# ---------------------------------------------------------------- schedules

@dataclass(frozen=True)
class ControlBounds:
    alpha_lo: float
    alpha_hi: float
    beta_lo: float
    beta_hi: float

    def __post_init__(self):
        if not (0.0 <= self.alpha_lo <= self.alpha_hi < 1.0):
            raise ValueError(f"need 0 <= alpha_lo <= alpha_hi < 1, got {self.alpha_lo}, {self.alpha_hi}")
        if not (0.0 <= self.beta_lo <= self.beta_hi < 1.0):
            raise ValueError(f"need 0 <= beta_lo <= beta_hi < 1, got {self.beta_lo}, {self.beta_hi}")

    def contains(self, alpha, beta) -> bool:
        alpha = np.asarray(alpha)
        beta = np.asarray(beta)
        return bool(np.all((alpha >= self.alpha_lo) & (alpha <= self.alpha_hi)
                           & (beta >= self.beta_lo) & (beta <= self.beta_hi)))


@dataclass(frozen=True)
class ConstantSchedule:
    alpha: float
    beta: float

    def __post_init__(self):
        check_control(self.alpha, self.beta)

    @property
    def bounds(self) -> ControlBounds:
        return ControlBounds(self.alpha, self.alpha, self.beta, self.beta)

    def controls(self, n: int):
        return np.full(n, self.alpha), np.full(n, self.beta)


@dataclass(frozen=True)
class SequenceSchedule:
    """Precomputed control arrays; step ``n`` applies ``alphas[n], betas[n]``."""

    alphas: np.ndarray
    betas: np.ndarray
    bounds: ControlBounds = None

    def __post_init__(self):
        al = np.asarray(self.alphas, dtype=np.float64)
        be = np.asarray(self.betas, dtype=np.float64)
        if al.ndim != 1 or al.shape != be.shape:
            raise ValueError("alphas and betas must be 1-D arrays of equal length")
        if al.size and not (np.all((al >= 0) & (al < 1)) and np.all((be >= 0) & (be < 1))):
            raise ValueError("every control value must lie in [0, 1)")
        bounds = self.bounds
        if bounds is None:
            if al.size:
                bounds = ControlBounds(float(al.min()), float(al.max()), float(be.min()), float(be.max()))
            else:
                bounds = ControlBounds(0.0, 0.0, 0.0, 0.0)
        elif not bounds.contains(al, be):
            raise ValueError("control sequence leaves its declared bounds")
        object.__setattr__(self, "alphas", al)
        object.__setattr__(self, "betas", be)
        object.__setattr__(self, "bounds", bounds)

    def controls(self, n: int):
        if n > self.alphas.shape[0]:
            raise ValueError(f"schedule has {self.alphas.shape[0]} steps, {n} requested")
        return self.alphas[:n], self.betas[:n]


@dataclass(frozen=True)
class RuleSchedule:
    """Closed-loop rule ``rule(n, state) -> (alpha, beta)`` confined to ``bounds``."""

    rule: Callable
    bounds: ControlBounds

    def controls(self, n: int):
        return None


def random_schedule(bounds: ControlBounds, n: int, seed: int) -> SequenceSchedule:
    """I.i.d. uniform controls inside ``bounds``."""
    rng = np.random.Generator(np.random.Philox(seed))
    u = rng.random((n, 2))
    al = bounds.alpha_lo + (bounds.alpha_hi - bounds.alpha_lo) * u[:, 0]
    be = bounds.beta_lo + (bounds.beta_hi - bounds.beta_lo) * u[:, 1]
    # rounding can land a hair above the upper edge
    np.minimum(al, bounds.alpha_hi, out=al)
    np.minimum(be, bounds.beta_hi, out=be)
    return SequenceSchedule(al, be, bounds)


# ---------------------------------------------------------------- trajectories

@dataclass(frozen=True)
class Trajectory:
    """Orbit record.

    ``states[i]`` is the state after ``first_step + i`` steps and
    ``controls[i]`` the pair applied to produce ``states[i + 1]``.
    """

    states: np.ndarray
    controls: np.ndarray
    seed: Optional[int] = None
    first_step: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def n_steps(self) -> int:
        return self.first_step + self.states.shape[0] - 1

    @property
    def final(self) -> PlanarState:
        return PlanarState(float(self.states[-1, 0]), float(self.states[-1, 1]))


def simulate(params: ModelParams, schedule, state0, n_steps: int,
             keep_last: Optional[int] = None, seed: Optional[int] = None,
             backend: Optional[str] = None) -> Trajectory:
    """Apply the controlled map ``n_steps`` times.

    With ``keep_last = k`` only the final ``k`` states (and the controls
    between them) are retained.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    x0, y0 = float(state0[0]), float(state0[1])
    if not (math.isfinite(x0) and math.isfinite(y0)) or x0 < 0.0 or y0 < 0.0:
        raise ValueError(f"start must be finite and nonnegative, got ({x0}, {y0})")
    if keep_last is not None and keep_last < 1:
        raise ValueError("keep_last must be at least 1")
    arrays = schedule.controls(n_steps)
    if arrays is None:
        states, controls = _simulate_rule(params, schedule, (x0, y0), n_steps)
    else:
        al, be = arrays
        controls = np.column_stack([al, be]) if n_steps else np.empty((0, 2))
        if keep_last is not None and keep_last <= n_steps:
            states, _ = kernels.orbit_tail(params, x0, y0, al, be, keep_last,
                                           (0.0, 0.0), 0.0, backend=backend)
            first = n_steps + 1 - keep_last
            return Trajectory(states, controls[first:].copy(), seed, first)
        states = kernels.orbit(params, x0, y0, al, be, backend=backend)
    first = 0
    if keep_last is not None and keep_last < states.shape[0]:
        first = states.shape[0] - keep_last
        states = states[first:].copy()
        controls = controls[first:].copy()
    return Trajectory(states, controls, seed, first)


def _simulate_rule(params, schedule: RuleSchedule, state0, n_steps):
    states = np.empty((n_steps + 1, 2))
    controls = np.empty((n_steps, 2))
    states[0] = state0
    state = PlanarState(*state0)
    bounds = schedule.bounds
    for n in range(n_steps):
        alpha, beta = schedule.rule(n, state)
        if not bounds.contains(alpha, beta):
            raise ValueError(f"rule emitted ({alpha}, {beta}) at step {n}, outside its bounds")
        state = pbc_step(params, alpha, beta, state)
        states[n + 1] = state
        controls[n] = (alpha, beta)
    return states, controls
