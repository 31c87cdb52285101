import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from ricker_pbc.local import (Matrix2, NormKind, constant_control_verdict, equal_control_thresholds,
                              equal_control_thresholds_pq, gram_eigenvalues, jacobian, local_thresholds,
                              matrix_norm, max_norm_margin, real_eigenvalues, variable_control_bounds)
from ricker_pbc.model import ModelParams

EX = ModelParams(3.0, 2.5, 0.5, 0.5)
entries = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(entries, entries, entries, entries)
def test_norms_match_numpy(a, b, c, d):
    m = Matrix2(a, b, c, d)
    arr = m.as_array()
    assert matrix_norm(m, NormKind.TRAFFIC) == pytest.approx(np.linalg.norm(arr, 1), abs=1e-12)
    assert matrix_norm(m, NormKind.MAX) == pytest.approx(np.linalg.norm(arr, np.inf), abs=1e-12)
    assert matrix_norm(m, NormKind.SPECTRAL) == pytest.approx(np.linalg.norm(arr, 2), rel=1e-9, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(entries, entries, entries)
def test_real_eigenvalues_of_symmetric(a, b, d):
    lo, hi = real_eigenvalues(Matrix2(a, b, b, d))
    ref = np.linalg.eigvalsh(np.array([[a, b], [b, d]]))
    assert lo == pytest.approx(ref[0], abs=1e-9) and hi == pytest.approx(ref[1], abs=1e-9)


def test_complex_spectrum_rejected():
    with pytest.raises(ValueError):
        real_eigenvalues(Matrix2(0.0, -1.0, 1.0, 0.0))


def test_jacobian_gram_example():
    J = jacobian(EX, 0.14, 0.05)
    big, small = gram_eigenvalues(J)
    assert big == pytest.approx(2.43701, abs=5e-4)
    assert big * small == pytest.approx(J.det ** 2, rel=1e-12)


def test_local_thresholds_example():
    a_star, b_star = local_thresholds(EX, 0.36)
    assert a_star == pytest.approx(1 / 7, abs=1e-12)
    assert b_star == pytest.approx(0.13636, abs=1e-5)
    with pytest.raises(ValueError):
        local_thresholds(EX, 0.1)


def test_thresholds_agree_with_eigenvalues():
    _, b_star = local_thresholds(EX, 0.36)
    above = constant_control_verdict(EX, 0.36, b_star + 0.01)
    below = constant_control_verdict(EX, 0.36, b_star - 0.01)
    assert above.sufficient_ok and above.spectral_radius_ok
    assert below.sufficient_status == "fail" and not below.spectral_radius_ok


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.99), st.floats(0, 0.99))
def test_sufficient_pair_implies_stability(alpha, beta):
    v = constant_control_verdict(EX, alpha, beta)
    if v.sufficient_ok:
        assert v.spectral_radius < 1.0 + 1e-12


def test_uncontrolled_example_unstable():
    v = constant_control_verdict(EX, 0.0, 0.0)
    assert not v.spectral_radius_ok


def test_variable_floors_bound_max_norm():
    fa, fb = variable_control_bounds(EX)
    assert max_norm_margin(EX, fa + 1e-3, 0.99, fb + 1e-3, 0.99) < 1.0
    rng = np.random.Generator(np.random.Philox(0))
    for al, be in rng.uniform([fa + 1e-3, fb + 1e-3], [0.99, 0.99], size=(500, 2)):
        assert matrix_norm(jacobian(EX, al, be), NormKind.MAX) < 1.0


def test_equal_control_example():
    t = equal_control_thresholds(EX)
    assert t.lambda_min == pytest.approx(-(5 + math.sqrt(37)) / 6, abs=1e-6)
    assert t.A == pytest.approx(0.29753, abs=1e-4)
    assert t.B == pytest.approx(0.42857, abs=1e-4)
    assert t.smaller == "A"


def test_equal_controls_at_A_are_marginal():
    t = equal_control_thresholds(EX)
    lo, _ = real_eigenvalues(jacobian(EX, t.A, t.A))
    assert lo == pytest.approx(-1.0, abs=1e-12)


def test_a_equals_b_gives_A_below_B():
    for p in (2.0, 3.0, 5.0, 8.0):
        t = equal_control_thresholds_pq(p, 0.9 * p, 0.5, 0.5)
        assert t.A < t.B


@settings(max_examples=500, deadline=None)
@given(st.floats(2.01, 20), st.floats(0.05, 1.0), st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_A_never_exceeds_B(p, ratio, a, b):
    # 1 - lambda_min is the Perron root of [[p, ap], [bq, q]], bounded by its largest row sum
    q = ratio * p
    t = equal_control_thresholds_pq(p, q, a, b)
    assume(t.B > 0)
    assert t.A <= t.B + 1e-12


def test_unequal_coefficients_case():
    # the faithful check; A > B is never produced for this family (see test_A_never_exceeds_B)
    worst = max(equal_control_thresholds_pq(p, 0.9 * p, 0.5, 0.7).A - equal_control_thresholds_pq(p, 0.9 * p, 0.5, 0.7).B
                for p in np.linspace(2, 10, 33))
    assert worst < 0
