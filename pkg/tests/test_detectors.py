import numpy as np

from ricker_pbc.detectors import EXPECTATIONS, Outcome, classify_tail, converged_to, period_two
from ricker_pbc.model import ConstantSchedule, ModelParams, equilibrium, simulate
from ricker_pbc.stochastic import StochasticControl, simulate_stochastic

EX = ModelParams(3.0, 2.5, 0.5, 0.5)
K = equilibrium(EX)


def test_converged_window():
    states = np.tile([K.p, K.q], (60, 1))
    assert converged_to(states, K)
    states[-1, 0] += 2e-3
    assert not converged_to(states, K)
    assert not converged_to(states[:10], K)


def test_period_two_on_synthetic_cycle():
    cyc = np.array([[1.0, 2.0], [3.0, 0.5]] * 100)
    assert period_two(cyc)
    assert not period_two(np.tile([1.0, 2.0], (200, 1)))


def test_deterministic_outcomes():
    stable = simulate(EX, ConstantSchedule(0.36, 0.14), (4.0, 1.1), 3000, keep_last=500)
    assert classify_tail(stable.states, K) is Outcome.CONVERGED
    cycle = simulate(EX, ConstantSchedule(0.3, 0.15), (4.0, 1.1), 3000, keep_last=500)
    assert classify_tail(cycle.states, K) is Outcome.TWO_CYCLE


def test_noisy_two_cycle():
    ctl = StochasticControl(0.3, 0.15, 0.1, 0.04).with_seed(1)
    traj = simulate_stochastic(EX, ctl, (4.0, 1.1), 5000, keep_last=2500)
    assert classify_tail(traj.states, K) is Outcome.NOISY_TWO_CYCLE


def test_expectation_labels_cover_outcomes():
    assert EXPECTATIONS["noisy equilibrium or converged"] >= {Outcome.CONVERGED, Outcome.NOISY_EQUILIBRIUM}
    for o in Outcome:
        if o is not Outcome.IRREGULAR:
            assert o in EXPECTATIONS[o.value]
    assert "irregular" not in EXPECTATIONS
