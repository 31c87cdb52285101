"""Randomly perturbed control intensities ``alpha + ell xi_n``, ``beta + ell_bar chi_n``.

Covers noise streams, the expected log-norm certificate, the admissible
design region where noise lifts sub-threshold mean controls, the constant
ledger of the local almost-sure argument, and Monte Carlo hitting-time runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Optional

import numpy as np

from . import kernels
from .detectors import Outcome, classify_tail, converged_to
from .invariant import Rect, entry_thresholds, invariant_domain
from .local import NormKind, jacobian, matrix_norm, equal_control_thresholds
from .lyapunov import global_floors
from .model import ModelParams, SequenceSchedule, Trajectory, equilibrium, simulate


# ---------------------------------------------------------------- noise

@dataclass(frozen=True)
class NoiseSpec:
    """Discrete i.i.d. noise on ``[-1, 1]``.

    ``shared`` drives both controls with one stream (``chi = xi``).
    """

    values: tuple = (-1.0, 1.0)
    probabilities: tuple = (0.5, 0.5)
    shared: bool = False
    seed: int = 0

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probabilities)
        if not vals or len(vals) != len(probs):
            raise ValueError("values and probabilities must be non-empty and of equal length")
        if any(not (-1.0 <= v <= 1.0) for v in vals):
            raise ValueError(f"noise support must lie in [-1, 1], got {vals}")
        if any(not (p >= 0.0) for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ValueError(f"probabilities must be nonnegative and sum to 1, got {probs}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def bernoulli(cls, shared: bool = False, seed: int = 0) -> "NoiseSpec":
        return cls((-1.0, 1.0), (0.5, 0.5), shared, seed)

    @property
    def reaches_one(self) -> bool:
        """Mass arbitrarily close to 1, needed by the design-region argument."""
        return any(v == 1.0 and p > 0.0 for v, p in zip(self.values, self.probabilities))

    def atoms(self):
        return [(v, p) for v, p in zip(self.values, self.probabilities) if p > 0.0]


def noise_stream(spec: NoiseSpec, n: int) -> np.ndarray:
    """``(n, 2)`` array of ``(xi_i, chi_i)``.

    Uniforms from a Philox generator are mapped through the cumulative
    probabilities, so a longer stream extends a shorter one with the same seed.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = np.random.Generator(np.random.Philox(spec.seed))
    u = rng.random((n, 1 if spec.shared else 2))
    cum = np.cumsum(spec.probabilities)
    cum[-1] = 1.0
    idx = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    out = np.asarray(spec.values)[idx]
    if spec.shared:
        out = np.repeat(out, 2, axis=1)
    return out


def derive_seed(base_seed: int, index: int) -> int:
    """Independent 64-bit seed for substream ``index``."""
    return int(np.random.SeedSequence([int(base_seed), int(index)]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------- controls

@dataclass(frozen=True)
class StochasticControl:
    alpha: float
    beta: float
    ell: float = 0.0
    ell_bar: float = 0.0
    noise: NoiseSpec = field(default_factory=NoiseSpec.bernoulli)

    def __post_init__(self):
        for name, mean, amp in (("ell", self.alpha, self.ell), ("ell_bar", self.beta, self.ell_bar)):
            if not 0.0 <= mean < 1.0:
                raise ValueError(f"mean control must lie in [0, 1), got {mean}")
            if amp != 0.0 and not 0.0 < amp < min(mean, 1.0 - mean):
                raise ValueError(f"{name} = {amp} must be 0 or lie in (0, {min(mean, 1.0 - mean)})")

    @property
    def deterministic(self) -> bool:
        return self.ell == 0.0 and self.ell_bar == 0.0

    def with_seed(self, seed: int) -> "StochasticControl":
        return replace(self, noise=replace(self.noise, seed=seed))

    def mean_control(self) -> "StochasticControl":
        return replace(self, ell=0.0, ell_bar=0.0)

    def schedule(self, n: int) -> SequenceSchedule:
        xi = noise_stream(self.noise, n)
        al = self.alpha + self.ell * xi[:, 0]
        be = self.beta + self.ell_bar * xi[:, 1]
        return SequenceSchedule(al, be)

    def support_pairs(self):
        """``((alpha_k, beta_k), prob)`` over the noise atoms."""
        atoms = self.noise.atoms()
        if self.noise.shared:
            return [((self.alpha + self.ell * v, self.beta + self.ell_bar * v), p) for v, p in atoms]
        return [((self.alpha + self.ell * v, self.beta + self.ell_bar * w), p * q)
                for (v, p), (w, q) in product(atoms, atoms)]


def simulate_stochastic(params: ModelParams, control: StochasticControl, state0, n_steps: int,
                        keep_last: Optional[int] = None, backend: Optional[str] = None) -> Trajectory:
    sched = control.schedule(n_steps)
    if sched.alphas.size and not (np.all((sched.alphas > 0.0) | (control.alpha == 0.0))
                                  and np.all(sched.alphas < 1.0) and np.all(sched.betas < 1.0)):
        raise AssertionError("perturbed control left (0, 1)")
    return simulate(params, sched, state0, n_steps, keep_last=keep_last,
                    seed=control.noise.seed, backend=backend)


# ---------------------------------------------------------------- log-norm certificate

def log_norm_atoms(params: ModelParams, control: StochasticControl, kind=NormKind.SPECTRAL):
    """``(prob, ||J||)`` for each realisable control pair."""
    return [(p, matrix_norm(jacobian(params, al, be), kind)) for (al, be), p in control.support_pairs()]


def expected_log_norm(params: ModelParams, control: StochasticControl, kind=NormKind.SPECTRAL) -> float:
    """``E ln ||J_{alpha + ell xi, beta + ell_bar chi}||`` by exact enumeration."""
    if control.deterministic:
        return math.log(matrix_norm(jacobian(params, control.alpha, control.beta), kind))
    return math.fsum(p * math.log(nrm) for p, nrm in log_norm_atoms(params, control, kind))


# ---------------------------------------------------------------- design region

@dataclass(frozen=True)
class DerivedBounds:
    epsilon: float
    alpha_lo: float
    beta_lo: float
    alpha_hi: float
    beta_hi: float


@dataclass(frozen=True)
class DesignRegion:
    """Mean controls below the floors ``rho`` that noise still stabilises.

    ``alpha in ((alpha_tilde + rho1)/2, rho1)`` with
    ``ell in (rho1 - alpha, min(alpha - alpha_tilde, 1 - alpha))``, same for beta.
    """

    alpha_tilde: float
    beta_tilde: float
    rho1: float
    rho2: float
    reason: Optional[str] = None

    @property
    def empty(self) -> bool:
        return self.reason is not None

    @property
    def alpha_interval(self):
        return (0.5 * (self.alpha_tilde + self.rho1), self.rho1)

    @property
    def beta_interval(self):
        return (0.5 * (self.beta_tilde + self.rho2), self.rho2)

    def ell_interval(self, alpha: float):
        return (self.rho1 - alpha, min(alpha - self.alpha_tilde, 1.0 - alpha))

    def ell_bar_interval(self, beta: float):
        return (self.rho2 - beta, min(beta - self.beta_tilde, 1.0 - beta))

    def contains(self, alpha: float, beta: float, ell: float, ell_bar: float) -> bool:
        if self.empty:
            return False
        (a0, a1), (b0, b1) = self.alpha_interval, self.beta_interval
        (l0, l1), (m0, m1) = self.ell_interval(alpha), self.ell_bar_interval(beta)
        return a0 < alpha < a1 and b0 < beta < b1 and l0 < ell < l1 and m0 < ell_bar < m1

    def derived(self, alpha: float, beta: float, ell: float, ell_bar: float) -> DerivedBounds:
        """Control box reached with positive probability on the top noise atoms."""
        if not self.contains(alpha, beta, ell, ell_bar):
            raise ValueError("candidate is outside the design region")
        eps = min(alpha + ell - self.rho1, beta + ell_bar - self.rho2)
        lo_a, lo_b = alpha + ell - eps / 2.0, beta + ell_bar - eps / 2.0
        if not (lo_a > self.rho1 and lo_b > self.rho2):
            raise AssertionError("derived lower controls fall below the floors")
        return DerivedBounds(eps, lo_a, lo_b, alpha + ell, beta + ell_bar)

    def sample(self, n: int, seed: int, margin: float = 0.1):
        """``n`` candidates ``(alpha, beta, ell, ell_bar)``, each coordinate drawn
        uniformly from the middle ``1 - 2 margin`` of its interval."""
        if self.empty:
            raise ValueError(f"design region is empty: {self.reason}")
        rng = np.random.Generator(np.random.Philox(seed))
        out = []
        for _ in range(n):
            u = margin + (1.0 - 2.0 * margin) * rng.random(4)
            (a0, a1), (b0, b1) = self.alpha_interval, self.beta_interval
            al = a0 + u[0] * (a1 - a0)
            be = b0 + u[1] * (b1 - b0)
            (l0, l1), (m0, m1) = self.ell_interval(al), self.ell_bar_interval(be)
            out.append((float(al), float(be), float(l0 + u[2] * (l1 - l0)), float(m0 + u[3] * (m1 - m0))))
        return out


def design_region(params: ModelParams) -> DesignRegion:
    thr = entry_thresholds(params)
    fl = global_floors(params)
    reason = None
    if fl.rho1 <= thr.alpha_tilde:
        reason = "rho1 <= alpha_tilde"
    elif fl.rho2 <= thr.beta_tilde:
        reason = "rho2 <= beta_tilde"
    return DesignRegion(thr.alpha_tilde, thr.beta_tilde, fl.rho1, fl.rho2, reason)


# ---------------------------------------------------------------- equal controls

def _equal_control_terms(params: ModelParams, alpha: float):
    lam = equal_control_thresholds(params).lambda_min
    return alpha + (1.0 - alpha) * lam, 1.0 - lam


def equal_control_log_functional(params: ModelParams, alpha: float, ell: float) -> float:
    """``E ln |alpha_n + (1 - alpha_n) lambda_min|`` for ``alpha_n = alpha + ell xi``, xi = +-1."""
    c, w = _equal_control_terms(params, alpha)
    return 0.5 * math.log(abs((c + ell * w) * (c - ell * w)))


@dataclass(frozen=True)
class NoiseInterval:
    raw: Optional[tuple]
    clipped: Optional[tuple]


def equal_control_noise_interval(params: ModelParams, alpha: float) -> NoiseInterval:
    """Amplitudes with ``|c^2 - ell^2 w^2| < 1``, ``c = alpha + (1-alpha) lambda_min``,
    ``w = 1 - lambda_min``; clipped to ``ell < min(alpha, 1 - alpha)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    c, w = _equal_control_terms(params, alpha)
    lo = math.sqrt(max(c * c - 1.0, 0.0)) / w
    hi = math.sqrt(c * c + 1.0) / w
    raw = (lo, hi)
    top = min(hi, alpha, 1.0 - alpha)
    return NoiseInterval(raw, (lo, top) if lo < top else None)


# ---------------------------------------------------------------- constant ledger

@dataclass(frozen=True)
class KolmogorovLedger:
    nu: float
    J_sup: float
    C_hat: float
    C_1: float
    remainder_ratio: float
    N: int
    auto_N: bool
    mu: float
    M_big: float
    eta: float
    log_delta: float
    delta: float
    delta1: float
    gamma: float
    mu_above_quarter_nu: bool
    gamma_coverage_certified: bool = False


def _ledger_tail(nu, J_sup, C_hat, N, delta1, delta_fraction):
    mu = min(1.0, nu / 2.0 - math.log(3.0) / (N + 1))
    if mu <= 0.0:
        raise ValueError(f"N = {N} too small: mu = {mu} <= 0")
    # A(n) = e^{-mu n} sum_{j=N}^{n-1} e^{c j} with c = 2 mu - nu/2
    c, d = 2.0 * mu - nu / 2.0, nu / 2.0 - mu

    def log_A(n):
        m = n - N
        if m <= 0:
            return -math.inf
        if c == 0.0:
            return -mu * n + math.log(m)
        return -mu * n + c * N + math.log(abs(math.expm1(c * m))) - math.log(abs(math.expm1(c)))

    if c > 0.0:
        m_star = math.log(mu / d) / c
        cands = {max(1, math.floor(m_star)), max(1, math.ceil(m_star))}
    else:
        cands = {1}
    logA = max(log_A(N + m) for m in cands)
    log_M = math.log(C_hat) + 3.0 * mu + logA
    js = 3.0 * mu + 2.0 * mu * np.arange(-1, N)
    log_t2 = -(math.log(C_hat) + (N + 1) * math.log(J_sup) + float(np.logaddexp.reduce(js)))
    log_eta = math.log(1.0 / 3.0) + max(math.log(delta1), log_t2, -log_M)
    log_bound = min(math.log(delta1), 0.0, log_eta - mu - math.log(J_sup + C_hat),
                    math.log(1.0 / 3.0) + log_eta - (N + 1) - (N + 1) * math.log(J_sup))
    log_delta = log_bound + math.log(delta_fraction)
    return mu, math.exp(log_M), math.exp(log_eta), log_delta


def ledger_constants(nu: float, J_sup: float, C_hat: float, N: int, delta1: float,
                     delta_fraction: float = 0.5):
    """``(mu, M, eta, log_delta)`` for given primitive constants."""
    return _ledger_tail(nu, J_sup, C_hat, N, delta1, delta_fraction)


def _vector_norm(v: np.ndarray, kind: NormKind) -> np.ndarray:
    if kind is NormKind.TRAFFIC:
        return np.abs(v).sum(axis=1)
    if kind is NormKind.MAX:
        return np.abs(v).max(axis=1)
    return np.sqrt((v ** 2).sum(axis=1))


def remainder_ratio(params: ModelParams, delta1: float, kind=NormKind.SPECTRAL,
                    n_samples: int = 10_000, seed: int = 0) -> float:
    """``max ||T(K+U) - K - J_00 U|| / ||U||^2`` over samples in the Euclidean ball ``|U| < delta1``."""
    kind = NormKind(kind)
    p, q = equilibrium(params)
    if not 0.0 < delta1 < min(p, q):
        raise ValueError(f"delta1 must lie in (0, {min(p, q)})")
    rng = np.random.Generator(np.random.Philox(seed))
    ang = 2.0 * math.pi * rng.random(n_samples)
    rad = delta1 * np.sqrt(1.0 - rng.random(n_samples))
    U = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    r, s, a, b = params.r, params.s, params.a, params.b
    x, y = p + U[:, 0], q + U[:, 1]
    Tx = x * np.exp(r - x - a * y) - p
    Ty = y * np.exp(s - b * x - y) - q
    J = jacobian(params, 0.0, 0.0)
    G = np.column_stack([Tx - (J.a11 * U[:, 0] + J.a12 * U[:, 1]),
                         Ty - (J.a21 * U[:, 0] + J.a22 * U[:, 1])])
    return float((_vector_norm(G, kind) / _vector_norm(U, kind) ** 2).max())


def kolmogorov_ledger(params: ModelParams, control: StochasticControl, kind=NormKind.SPECTRAL,
                      gamma: float = 0.1, delta1: float = 0.1, N: Optional[int] = None,
                      n_samples: int = 10_000, seed: int = 0, safety: float = 1.25,
                      delta_fraction: float = 0.5) -> KolmogorovLedger:
    """Constants of the local almost-sure contraction argument.

    ``N`` is not certified against the law-of-large-numbers event; by default
    it is the smallest horizon that keeps ``mu`` above ``nu / 4``.
    """
    kind = NormKind(kind)
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if not delta1 > 0.0:
        raise ValueError("delta1 must be positive")
    nu = -expected_log_norm(params, control, kind)
    if not nu > 0.0:
        raise ValueError(f"certificate unavailable: E ln||J|| = {-nu} >= 0")
    # the norm is convex in (e, e_bar), so the corners of [-1, 1]^2 decide
    J_sup = max(matrix_norm(jacobian(params, control.alpha + control.ell * e,
                                     control.beta + control.ell_bar * f), kind)
                for e in (-1.0, 1.0) for f in (-1.0, 1.0))
    C_1 = 1.0 - min(control.alpha - control.ell, control.beta - control.ell_bar)
    ratio = remainder_ratio(params, delta1, kind, n_samples, seed)
    C_hat = C_1 * ratio * safety
    auto = N is None
    if auto:
        ln3 = math.log(3.0)
        N = max(math.floor(2.0 * ln3 / nu - 1.0) + 1, math.floor(4.0 * ln3 / nu), 1)
    N = int(N)
    if not N > 2.0 * math.log(3.0) / nu - 1.0:
        raise ValueError(f"N = {N} must exceed 2 ln 3 / nu - 1")
    mu, M, eta, log_delta = _ledger_tail(nu, J_sup, C_hat, N, delta1, delta_fraction)
    return KolmogorovLedger(nu, J_sup, C_hat, C_1, ratio, N, auto, mu, M, eta, log_delta,
                            math.exp(log_delta), delta1, gamma, mu > nu / 4.0)


# ---------------------------------------------------------------- Monte Carlo

@dataclass(frozen=True)
class PointSampler:
    x: float
    y: float

    def __call__(self, rng) -> tuple:
        return (self.x, self.y)


@dataclass(frozen=True)
class RectSampler:
    rect: Rect

    def __call__(self, rng) -> tuple:
        u = rng.random(2)
        return tuple(float(v) for v in self.rect.scale(u))


def domain_sampler(params: ModelParams, alpha: float, beta: float) -> RectSampler:
    return RectSampler(invariant_domain(params, alpha, beta))


def start_rng(trial_seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(trial_seed, spawn_key=(1,))))


@dataclass(frozen=True)
class TrialResult:
    index: int
    seed: int
    start: tuple
    tau: Optional[int]
    converged: bool
    outcome: str
    final: tuple


@dataclass(frozen=True)
class MonteCarloReport:
    trials: list
    horizon: int
    delta: float

    @property
    def n(self) -> int:
        return len(self.trials)

    @property
    def taus(self):
        return [t.tau for t in self.trials]

    @property
    def p_entered(self) -> float:
        return sum(t.tau is not None for t in self.trials) / self.n

    @property
    def p_converged(self) -> float:
        return sum(t.tau is not None and t.converged for t in self.trials) / self.n

    @property
    def finite_taus(self):
        return [t for t in self.taus if t is not None]

    @property
    def mean_tau(self) -> Optional[float]:
        f = self.finite_taus
        return float(np.mean(f)) if f else None

    @property
    def max_tau(self) -> Optional[int]:
        f = self.finite_taus
        return max(f) if len(f) == self.n else None

    def tau_histogram(self) -> dict:
        """Counts per bin ``[2^k, 2^{k+1})``, with ``"0"`` and ``"never"`` bins."""
        hist = {}
        for t in self.taus:
            if t is None:
                key = "never"
            elif t == 0:
                key = "0"
            else:
                k = t.bit_length() - 1
                key = f"{1 << k}-{(1 << (k + 1)) - 1}"
            hist[key] = hist.get(key, 0) + 1
        return hist

    def outcome_counts(self) -> dict:
        counts = {}
        for t in self.trials:
            counts[t.outcome] = counts.get(t.outcome, 0) + 1
        return counts


def run_trial(params: ModelParams, control: StochasticControl, start_sampler, delta: float,
              horizon: int, trial_seed: int, index: int = 0, tail: Optional[int] = None,
              tol: float = 1e-3, window: int = 50, backend: Optional[str] = None) -> TrialResult:
    start = start_sampler(start_rng(trial_seed))
    ctl = control.with_seed(trial_seed)
    sched = ctl.schedule(horizon)
    keep = min(horizon + 1, tail if tail is not None else max(horizon // 2, 2 * window))
    K = equilibrium(params)
    states, entry = kernels.orbit_tail(params, start[0], start[1], sched.alphas, sched.betas,
                                       keep, K, delta, backend=backend)
    conv = converged_to(states, K, tol, window)
    outcome = classify_tail(states, K, tol, window)
    return TrialResult(index, trial_seed, tuple(float(v) for v in start), entry, conv,
                       outcome.value, (float(states[-1, 0]), float(states[-1, 1])))


def monte_carlo_convergence(params: ModelParams, control: StochasticControl, start_sampler,
                            delta: float, horizon: int, trials: int, base_seed: int,
                            tail: Optional[int] = None, tol: float = 1e-3, window: int = 50,
                            backend: Optional[str] = None) -> MonteCarloReport:
    """Independent trials with noise and start seeded by ``derive_seed(base_seed, k)``.

    Trials run one after another; each is reproducible on its own from its seed.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    results = [run_trial(params, control, start_sampler, delta, horizon, derive_seed(base_seed, k),
                         k, tail, tol, window, backend)
               for k in range(trials)]
    return MonteCarloReport(results, horizon, delta)
