"""Jacobians at the coexistence equilibrium and local-stability thresholds."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .model import ModelParams, check_control, equilibrium


class NormKind(str, Enum):
    TRAFFIC = "l1"
    SPECTRAL = "l2"
    MAX = "linf"


class Matrix2(NamedTuple):
    a11: float
    a12: float
    a21: float
    a22: float

    @property
    def trace(self) -> float:
        return self.a11 + self.a22

    @property
    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def transpose(self) -> "Matrix2":
        return Matrix2(self.a11, self.a21, self.a12, self.a22)

    def matmul(self, o: "Matrix2") -> "Matrix2":
        return Matrix2(self.a11 * o.a11 + self.a12 * o.a21, self.a11 * o.a12 + self.a12 * o.a22,
                       self.a21 * o.a11 + self.a22 * o.a21, self.a21 * o.a12 + self.a22 * o.a22)

    def apply(self, v):
        return (self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a21, self.a22]])


IDENTITY = Matrix2(1.0, 0.0, 0.0, 1.0)


def real_eigenvalues(m: Matrix2):
    """Both eigenvalues ``(small, big)`` of a matrix with real spectrum.

    The larger-magnitude root comes from the quadratic formula with the sign
    of the trace; the other is ``det / root`` to avoid cancellation.
    """
    tr, det = m.trace, m.det
    # (a11 - a22)^2 + 4 a12 a21 equals tr^2 - 4 det without the cancellation
    d = m.a11 - m.a22
    disc = d * d + 4.0 * m.a12 * m.a21
    if disc < 0.0:
        if disc > -1e-12 * max(1.0, tr * tr):
            disc = 0.0
        else:
            raise ValueError(f"complex eigenvalues (discriminant {disc})")
    root = math.sqrt(disc)
    big = 0.5 * (tr + math.copysign(root, tr))
    if big == 0.0:
        return 0.0, 0.0
    other = det / big
    return min(big, other), max(big, other)


def gram_eigenvalues(m: Matrix2):
    """Eigenvalues of ``m^T m``, larger first."""
    g = m.transpose().matmul(m)
    tr, det = g.trace, g.det
    root = math.hypot(g.a11 - g.a22, 2.0 * g.a12)
    big = 0.5 * (tr + root)
    small = det / big if big > 0.0 else 0.0
    return big, small


def matrix_norm(m: Matrix2, kind: NormKind = NormKind.SPECTRAL) -> float:
    kind = NormKind(kind)
    if kind is NormKind.TRAFFIC:
        return max(abs(m.a11) + abs(m.a21), abs(m.a12) + abs(m.a22))
    if kind is NormKind.MAX:
        return max(abs(m.a11) + abs(m.a12), abs(m.a21) + abs(m.a22))
    big, _ = gram_eigenvalues(m)
    norm = math.sqrt(big)
    # ||m||_2 < 1 iff the Gram matrix G has tr G - det G < 1 and det G < 1
    g = m.transpose().matmul(m)
    if abs(norm - 1.0) > 1e-9:
        criterion = (g.trace - g.det < 1.0) and (g.det < 1.0)
        if criterion != (norm < 1.0):
            raise ArithmeticError(f"spectral norm {norm} disagrees with the trace/det criterion")
    return norm


def jacobian(params: ModelParams, alpha: float, beta: float) -> Matrix2:
    check_control(alpha, beta)
    p, q = equilibrium(params)
    pa = (1.0 - alpha) * p
    qb = (1.0 - beta) * q
    return Matrix2(1.0 - pa, -params.a * pa, -params.b * qb, 1.0 - qb)


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class LocalVerdict:
    p_alpha: float
    q_beta: float
    trace: float
    det: float
    eig_min: float
    eig_max: float
    sum_margin: float
    det_margin: float
    spectral_radius_ok: bool

    @property
    def sufficient_status(self) -> str:
        """``"ok"``, ``"fail"`` or ``"inconclusive"`` (a margin exactly zero)."""
        if self.sum_margin > 0.0 and self.det_margin > 0.0:
            return "ok"
        if self.sum_margin < 0.0 or self.det_margin < 0.0:
            return "fail"
        return "inconclusive"

    @property
    def sufficient_ok(self) -> bool:
        return self.sufficient_status == "ok"

    @property
    def spectral_radius(self) -> float:
        return max(abs(self.eig_min), abs(self.eig_max))


def constant_control_verdict(params: ModelParams, alpha: float, beta: float) -> LocalVerdict:
    """Sufficient pair ``p_a + q_b < 4``, ``2 - p_a - q_b + p_a q_b (1-ab)/2 > 0``
    together with the exact eigenvalue test."""
    J = jacobian(params, alpha, beta)
    p, q = equilibrium(params)
    pa, qb = (1.0 - alpha) * p, (1.0 - beta) * q
    lo, hi = real_eigenvalues(J)
    ab = params.a * params.b
    return LocalVerdict(
        pa, qb, J.trace, J.det, lo, hi,
        4.0 - pa - qb,
        2.0 - pa - qb + pa * qb * (1.0 - ab) / 2.0,
        max(abs(lo), abs(hi)) < 1.0,
    )


def local_thresholds(params: ModelParams, alpha: float = None):
    """``(alpha_star, beta_star(alpha))``; ``beta_star`` is None without ``alpha``."""
    p, q = equilibrium(params)
    alpha_star = max(1.0 - 2.0 / p, 0.0)
    if alpha is None:
        return alpha_star, None
    if not alpha > alpha_star:
        raise ValueError(f"beta_star needs alpha > alpha_star = {alpha_star}, got {alpha}")
    ab = params.a * params.b
    denom = (1.0 - alpha) * (1.0 - ab) * p - 2.0
    w = q * (1.0 - ab)
    if denom == 0.0:
        return alpha_star, max(1.0 - 2.0 / w, 0.0)
    beta_star = 1.0 - 2.0 / w - 4.0 * ab / (w * denom)
    return alpha_star, min(max(beta_star, 0.0), math.nextafter(1.0, 0.0))


def variable_control_bounds(params: ModelParams):
    """Floors above which every Jacobian at K has max-norm below one."""
    p, q = equilibrium(params)
    return (max(1.0 - 2.0 / (p * (1.0 + params.a)), 0.0),
            max(1.0 - 2.0 / (q * (1.0 + params.b)), 0.0))


def max_norm_margin(params: ModelParams, alpha_lo: float, alpha_hi: float,
                    beta_lo: float, beta_hi: float) -> float:
    """``lambda`` with ``||J_{alpha,beta}||_inf <= lambda`` on the whole box.

    Each row sum is piecewise linear in its control, so the corners decide.
    """
    return max(matrix_norm(jacobian(params, al, be), NormKind.MAX)
               for al in (alpha_lo, alpha_hi) for be in (beta_lo, beta_hi))


@dataclass(frozen=True)
class EqualControlThresholds:
    lambda_min: float
    lambda_max: float
    A: float
    B: float

    @property
    def smaller(self) -> str:
        if self.A < self.B:
            return "A"
        if self.B < self.A:
            return "B"
        return "equal"


def equal_control_thresholds_pq(p: float, q: float, a: float, b: float) -> EqualControlThresholds:
    root = math.sqrt((p - q) ** 2 + 4.0 * a * b * p * q)
    lam_max = 0.5 * (2.0 - p - q + root)
    lam_min = 0.5 * (2.0 - p - q - root)
    A = (-1.0 - lam_min) / (1.0 - lam_min)
    B = 1.0 - min(2.0 / (p * (1.0 + a)), 2.0 / (q * (1.0 + b)))
    return EqualControlThresholds(lam_min, lam_max, A, B)


def equal_control_thresholds(params: ModelParams) -> EqualControlThresholds:
    """Eigenvalues of the uncontrolled Jacobian at K and the two equal-control floors.

    ``A`` is the exact threshold for ``alpha = beta`` (the control maps each
    eigenvalue ``lam`` to ``alpha + (1 - alpha) lam``); ``B`` is the max-norm one.
    """
    p, q = equilibrium(params)
    return equal_control_thresholds_pq(p, q, params.a, params.b)
