import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ricker_pbc.model import (ConstantSchedule, ControlBounds, ModelParams, ParameterError, RuleSchedule,
                              SequenceSchedule, equilibrium, pbc_image, pbc_step, random_schedule, simulate)

EX = ModelParams(3.0, 2.5, 0.5, 0.5)


def test_equilibrium_exact():
    p, q = equilibrium(EX)
    assert abs(p - 7 / 3) < 1e-12 and abs(q - 4 / 3) < 1e-12


@pytest.mark.parametrize("args, needle", [
    ((1.0, 2.4, 0.5, 0.5), "r > a*s"),
    ((3.0, 1.0, 0.5, 0.5), "s > b*r"),
    ((3.0, 2.5, 1.0, 0.5), "0 < a < 1"),
    ((3.0, 2.5, 0.5, 0.0), "0 < b < 1"),
    ((math.nan, 2.5, 0.5, 0.5), "finite"),
])
def test_invalid_params(args, needle):
    with pytest.raises(ParameterError, match=needle.replace("*", r"\*")):
        ModelParams(*args)


def test_from_equilibrium_roundtrip():
    params = ModelParams.from_equilibrium(2.0, 1.5, 0.3, 0.4)
    p, q = equilibrium(params)
    assert p == pytest.approx(2.0, abs=1e-14) and q == pytest.approx(1.5, abs=1e-14)


def test_step_matches_hand_value():
    x, y = pbc_step(EX, 0.3, 0.15, (4.0, 1.1))
    assert x == pytest.approx(4.0 * (0.7 * math.exp(3 - 4 - 0.55) + 0.3), rel=1e-15)
    assert y == pytest.approx(1.1 * (0.85 * math.exp(2.5 - 2 - 1.1) + 0.15), rel=1e-15)


def test_step_rejects_bad_control_and_state():
    with pytest.raises(ValueError):
        pbc_step(EX, 1.0, 0.1, (1.0, 1.0))
    with pytest.raises(ValueError):
        pbc_step(EX, 0.1, 0.1, (-1.0, 1.0))


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.99), st.floats(0, 0.99))
def test_equilibrium_fixed_for_every_control(alpha, beta):
    K = equilibrium(EX)
    x, y = pbc_step(EX, alpha, beta, K)
    assert abs(x - K.p) < 1e-12 and abs(y - K.q) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 20), st.floats(0, 20), st.floats(0, 0.99), st.floats(0, 0.99))
def test_positive_quadrant_preserved_and_axes_invariant(x, y, alpha, beta):
    xn, yn = pbc_step(EX, alpha, beta, (x, y))
    assert xn >= 0 and yn >= 0
    if x == 0:
        assert xn == 0
    if y == 0:
        assert yn == 0


def test_vectorised_image_matches_scalar():
    xs = np.linspace(0.1, 5, 7)
    ys = np.linspace(0.2, 3, 7)
    xn, yn = pbc_image(EX, 0.4, 0.2, xs, ys)
    for i in range(7):
        assert (xn[i], yn[i]) == pbc_step(EX, 0.4, 0.2, (xs[i], ys[i]))


def test_constant_schedule_simulation():
    traj = simulate(EX, ConstantSchedule(0.36, 0.14), (4.0, 1.1), 100)
    assert traj.states.shape == (101, 2) and traj.controls.shape == (100, 2)
    state = (4.0, 1.1)
    for _ in range(100):
        state = pbc_step(EX, 0.36, 0.14, state)
    assert tuple(traj.final) == state


def test_keep_last_is_a_suffix():
    full = simulate(EX, ConstantSchedule(0.3, 0.15), (4.0, 1.1), 300)
    tail = simulate(EX, ConstantSchedule(0.3, 0.15), (4.0, 1.1), 300, keep_last=20)
    assert np.array_equal(tail.states, full.states[-20:])
    assert tail.first_step == 281 and tail.n_steps == 300


def test_random_schedule_in_bounds_and_reproducible():
    b = ControlBounds(0.47, 0.6, 0.25, 0.6)
    s1 = random_schedule(b, 1000, 3)
    s2 = random_schedule(b, 1000, 3)
    assert np.array_equal(s1.alphas, s2.alphas)
    assert s1.alphas.min() >= 0.47 and s1.alphas.max() <= 0.6
    assert s1.betas.min() >= 0.25 and s1.betas.max() <= 0.6
    assert not np.array_equal(s1.alphas, random_schedule(b, 1000, 4).alphas)


def test_sequence_schedule_must_cover_horizon():
    sched = SequenceSchedule(np.full(5, 0.3), np.full(5, 0.2))
    with pytest.raises(ValueError):
        simulate(EX, sched, (1.0, 1.0), 6)


def test_rule_schedule_matches_constant():
    b = ControlBounds(0.0, 0.9, 0.0, 0.9)
    rule = simulate(EX, RuleSchedule(lambda n, s: (0.36, 0.14), b), (4.0, 1.1), 50)
    const = simulate(EX, ConstantSchedule(0.36, 0.14), (4.0, 1.1), 50)
    assert np.array_equal(rule.states, const.states)


def test_rule_outside_bounds_rejected():
    b = ControlBounds(0.0, 0.5, 0.0, 0.5)
    with pytest.raises(ValueError, match="outside its bounds"):
        simulate(EX, RuleSchedule(lambda n, s: (0.6, 0.1), b), (4.0, 1.1), 5)
