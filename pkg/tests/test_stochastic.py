import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ricker_pbc.local import NormKind
from ricker_pbc.model import ModelParams, equilibrium
from ricker_pbc.stochastic import (NoiseSpec, PointSampler, StochasticControl, derive_seed, design_region,
                                   domain_sampler, equal_control_log_functional, equal_control_noise_interval,
                                   expected_log_norm, kolmogorov_ledger, ledger_constants, log_norm_atoms,
                                   monte_carlo_convergence, noise_stream, run_trial, simulate_stochastic)

EX = ModelParams(3.0, 2.5, 0.5, 0.5)


def test_noise_stream_prefix_property():
    spec = NoiseSpec.bernoulli(seed=42)
    assert np.array_equal(noise_stream(spec, 1000)[:100], noise_stream(spec, 100))
    assert set(np.unique(noise_stream(spec, 1000))) == {-1.0, 1.0}


def test_shared_noise_equal_components():
    xi = noise_stream(NoiseSpec.bernoulli(shared=True, seed=1), 500)
    assert np.array_equal(xi[:, 0], xi[:, 1])


def test_discrete_noise_frequencies():
    spec = NoiseSpec((-1.0, 0.0, 1.0), (0.2, 0.5, 0.3), seed=9)
    xi = noise_stream(spec, 200_000)[:, 0]
    for v, p in zip(spec.values, spec.probabilities):
        assert abs(np.mean(xi == v) - p) < 5e-3


@pytest.mark.parametrize("kw", [dict(values=(2.0,), probabilities=(1.0,)),
                                dict(values=(1.0, -1.0), probabilities=(0.7, 0.7)),
                                dict(seed=-1)])
def test_noise_spec_validation(kw):
    with pytest.raises(ValueError):
        NoiseSpec(**kw)


def test_amplitude_validation():
    with pytest.raises(ValueError):
        StochasticControl(0.1, 0.5, 0.2, 0.0)
    StochasticControl(0.0, 0.5, 0.0, 0.0)


def test_derive_seed_distinct_and_stable():
    seeds = {derive_seed(7, k) for k in range(1000)}
    assert len(seeds) == 1000 and derive_seed(7, 3) == derive_seed(7, 3)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.25, 0.7), st.floats(0.25, 0.7))
def test_perturbed_controls_stay_admissible(seed, alpha, beta):
    ell = 0.9 * min(alpha, 1 - alpha)
    ctl = StochasticControl(alpha, beta, ell, 0.5 * min(beta, 1 - beta)).with_seed(seed)
    sched = ctl.schedule(200)
    assert sched.alphas.min() > 0 and sched.alphas.max() < 1
    assert sched.betas.min() > 0 and sched.betas.max() < 1


def test_simulation_reproducible():
    ctl = StochasticControl(0.34, 0.15, 0.2, 0.1).with_seed(5)
    a = simulate_stochastic(EX, ctl, (4.0, 1.1), 500)
    b = simulate_stochastic(EX, ctl, (4.0, 1.1), 500)
    assert np.array_equal(a.states, b.states)


def test_expected_log_norms_example():
    ctl = StochasticControl(0.34, 0.15, 0.2, 0.1)
    atoms = log_norm_atoms(EX, ctl, NormKind.SPECTRAL)
    assert math.prod(n for _, n in atoms) == pytest.approx(0.988424, abs=5e-4)
    assert expected_log_norm(EX, ctl) == pytest.approx(-0.002912, abs=5e-5)
    shared = StochasticControl(0.36, 0.132, 0.211, 0.118, NoiseSpec.bernoulli(shared=True))
    assert expected_log_norm(EX, shared, NormKind.MAX) < 0


def test_mean_controls_alone_unstable():
    # both noisy examples sit on deterministic controls that do not stabilise K
    for ctl in (StochasticControl(0.34, 0.15), StochasticControl(0.36, 0.132)):
        assert expected_log_norm(EX, ctl, NormKind.SPECTRAL) > 0


def test_equal_control_interval():
    iv = equal_control_noise_interval(EX, 0.25)
    assert iv.raw[0] == pytest.approx(0.189, abs=2e-3) and iv.raw[1] == pytest.approx(0.531, abs=2e-3)
    assert iv.clipped == (iv.raw[0], 0.25)
    mid = 0.5 * (iv.raw[0] + iv.raw[1])
    assert equal_control_log_functional(EX, 0.25, mid) < 0
    assert equal_control_log_functional(EX, 0.25, 0.5 * iv.raw[0]) > 0


def test_equal_control_above_A_includes_small_noise():
    iv = equal_control_noise_interval(EX, 0.35)
    assert iv.clipped[0] == 0.0


def test_design_region_example():
    region = design_region(EX)
    assert not region.empty
    assert region.alpha_interval[0] == pytest.approx(0.452717, abs=1e-5)
    assert region.alpha_interval[1] == pytest.approx(0.46212, abs=1e-5)
    for cand in region.sample(10, 0):
        assert region.contains(*cand)
        d = region.derived(*cand)
        assert d.alpha_hi >= 0.462117 - 1e-12 and d.beta_hi >= 0.244919 - 1e-12


def test_design_region_needs_unstable_rates():
    with pytest.raises(ValueError):
        design_region(ModelParams(1.5, 1.8, 0.5, 0.5))


def test_ledger_constants_hand_value():
    mu, M, eta, log_delta = ledger_constants(0.2, 2.0, 1.0, 20, 0.1)
    assert mu == pytest.approx(0.047685, abs=1e-6)
    assert M > 0 and eta > 0 and log_delta < math.log(eta)


def test_kolmogorov_ledger_fields():
    led = kolmogorov_ledger(EX, StochasticControl(0.34, 0.15, 0.2, 0.1), n_samples=2000)
    assert led.nu == pytest.approx(0.002912, rel=5e-3)
    assert led.J_sup == pytest.approx(math.sqrt(2.43701), abs=5e-4)
    assert led.mu > 0 and led.mu_above_quarter_nu
    assert led.log_delta < 0 and led.M_big > 0
    assert not led.gamma_coverage_certified


def test_trial_seeds_fix_everything():
    K = equilibrium(EX)
    al, be, l, lb = design_region(EX).sample(1, 0)[0]
    ctl = StochasticControl(al, be, l, lb)
    s = domain_sampler(EX, al - l, be - lb)
    a = run_trial(EX, ctl, s, 0.05, 800, 123)
    b = run_trial(EX, ctl, s, 0.05, 800, 123)
    assert a == b
    assert a.tau is not None and a.converged
    assert math.hypot(a.final[0] - K.p, a.final[1] - K.q) < 1e-3


def test_monte_carlo_report():
    rep = monte_carlo_convergence(EX, StochasticControl(0.36, 0.14), PointSampler(4.0, 1.1), 0.05, 2000, 5, 0)
    assert rep.n == 5 and rep.p_entered == 1.0 and rep.p_converged == 1.0
    assert sum(rep.tau_histogram().values()) == 5
    rep2 = monte_carlo_convergence(EX, StochasticControl(0.3, 0.15), PointSampler(4.0, 1.1), 0.05, 2000, 3, 0)
    assert rep2.p_entered == 0.0 and rep2.tau_histogram()["never"] == 3
    assert rep2.outcome_counts() == {"two-cycle": 3}
