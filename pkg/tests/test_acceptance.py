"""Acceptance criteria, one check per criterion.

Each check returns ``(ok, detail)``. Under pytest every criterion is its own
test and the conftest prints a PASS/FAIL line for each at the end of the run.
Run directly (``python3 tests/test_acceptance.py``) to print the same lines.
"""
import math
import os
import sys
import tempfile
import time

import pytest

from ricker_pbc import cli, experiments
from ricker_pbc.config import load
from ricker_pbc.invariant import check_invariance, check_nested_invariance, entry_thresholds, invariant_domain
from ricker_pbc.local import (NormKind, equal_control_thresholds, equal_control_thresholds_pq, gram_eigenvalues,
                              jacobian, local_thresholds)
from ricker_pbc.lyapunov import check_descent, descent_floor, global_floors, steps_outside_ball
from ricker_pbc.model import ModelParams, equilibrium
from ricker_pbc.stochastic import (NoiseSpec, StochasticControl, equal_control_noise_interval,
                                   expected_log_norm, log_norm_atoms)

CONFIGS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")
EX61 = ModelParams(3.0, 2.5, 0.5, 0.5)

RESULTS = {}
CHECKS = {}


def criterion(number, title):
    def wrap(fn):
        CHECKS[number] = (title, fn)
        return fn
    return wrap


def close(value, target, tol):
    return abs(value - target) <= tol


def _cfg(name):
    return load(os.path.join(CONFIGS, name))


@criterion(1, "thresholds of the r=3, s=2.5, a=b=0.5 example")
def check_thresholds():
    p, q = equilibrium(EX61)
    a_star, b_star = local_thresholds(EX61, 0.36)
    thr = entry_thresholds(EX61)
    fl = global_floors(EX61)
    rep = experiments.threshold_report(_cfg("thresholds_r3.ini"))
    flagged = any(d["key"] == "rho2" and not d["agrees"] and d["reference"] == 0.2249
                  for d in rep["discrepancies"])
    parts = {
        "p": close(p, 7 / 3, 1e-12), "q": close(q, 4 / 3, 1e-12),
        "alpha_star": close(a_star, 1 / 7, 5e-4), "beta_star": close(b_star, 0.13636, 1e-5),
        "alpha_tilde": close(thr.alpha_tilde, 0.4433, 5e-4), "rho1": close(fl.rho1, 0.46212, 1e-5),
        "rho2": close(fl.rho2, 0.24492, 1e-5), "rho2_flagged": flagged,
    }
    detail = (f"K=({p:.15g}, {q:.15g}) alpha*={a_star:.6f} beta*={b_star:.6f} "
              f"alpha~={thr.alpha_tilde:.6f} rho1={fl.rho1:.6f} rho2={fl.rho2:.6f} flagged={flagged}")
    return all(parts.values()), detail + _failed(parts)


def _failed(parts):
    bad = [k for k, v in parts.items() if not v]
    return f" failed: {', '.join(bad)}" if bad else ""


@criterion(2, "eigenvalues and equal-control floors")
def check_equal_controls():
    cfg = _cfg("equal_controls_r3.ini")
    params = experiments.build_params(cfg)
    t = equal_control_thresholds(params)
    # the claims are for any p; sweep p over the unstable range where both floors are positive
    ps = [2.0 + 0.25 * k for k in range(33)]
    same = [equal_control_thresholds_pq(p, 0.9 * p, 0.5, 0.5) for p in ps]
    diff = [equal_control_thresholds_pq(p, 0.9 * p, 0.5, 0.7) for p in ps]
    parts = {
        "lambda_min": close(t.lambda_min, -(5 + math.sqrt(37)) / 6, 1e-6),
        "A": close(t.A, 0.29753, 1e-4), "B": close(t.B, 0.42857, 1e-4),
        "A<B for a=b, q=0.9p": all(e.A < e.B for e in same),
        "A>B for a=0.5, b=0.7, q=0.9p": any(e.A > e.B for e in diff),
    }
    gap = max(e.A - e.B for e in diff)
    detail = (f"lambda_min={t.lambda_min:.9f} A={t.A:.6f} B={t.B:.6f}; a=0.5,b=0.7,q=0.9p over p in [2, 10]: "
              f"max(A-B)={gap:.4g}")
    return all(parts.values()), detail + _failed(parts)


@criterion(3, "norm products under Bernoulli noise")
def check_norm_products():
    ind = StochasticControl(0.34, 0.15, 0.2, 0.1, NoiseSpec.bernoulli())
    grams = [gram_eigenvalues(jacobian(EX61, al, be))[0] for (al, be), _ in ind.support_pairs()]
    prod2 = math.prod(n for _, n in log_norm_atoms(EX61, ind, NormKind.SPECTRAL))
    shared = StochasticControl(0.36, 0.132, 0.211, 0.118, NoiseSpec.bernoulli(shared=True))
    prodinf = math.prod(n for _, n in log_norm_atoms(EX61, shared, NormKind.MAX))
    e2 = expected_log_norm(EX61, ind, NormKind.SPECTRAL)
    einf = expected_log_norm(EX61, shared, NormKind.MAX)
    targets = (2.43701, 0.314298, 2.15317, 0.592392)
    parts = {
        "gram eigenvalues": all(any(close(g, t, 5e-4) for g in grams) for t in targets),
        "spectral product": close(prod2, 0.988424, 5e-4),
        "max-norm product": close(prodinf, 0.992218, 5e-4),
        "mean logs negative": e2 < 0 and einf < 0,
    }
    detail = (f"gram={[round(g, 6) for g in grams]} prod_l2={prod2:.6f} prod_linf={prodinf:.6f} "
              f"E_l2={e2:.6g} E_linf={einf:.6g}")
    return all(parts.values()), detail + _failed(parts)


@criterion(4, "equal-control noise interval at alpha=0.25")
def check_noise_interval():
    params = experiments.build_params(_cfg("equal_controls_r3.ini"))
    iv = equal_control_noise_interval(params, 0.25)
    parts = {
        "raw": iv.raw is not None and close(iv.raw[0], 0.189, 2e-3) and close(iv.raw[1], 0.531, 2e-3),
        "clipped": iv.clipped is not None and close(iv.clipped[0], 0.189, 2e-3) and iv.clipped[1] == 0.25,
    }
    return all(parts.values()), f"raw={iv.raw} clipped={iv.clipped}" + _failed(parts)


RAMPS = ("ramp_a034_b010.ini", "ramp_a030_b015.ini", "ramp_equal_a025.ini", "ramp_r3_s4.ini", "local_vs_global.ini")


@criterion(5, "trajectory panels classified as expected in at least 18 of 20 seeds")
def check_panels():
    lines, ok = [], True
    for name in RAMPS:
        cfg = _cfg(name)
        cfg.values["run"]["trials"] = 20
        with tempfile.TemporaryDirectory() as tmp:
            res, _ = experiments.run_montecarlo(cfg, tmp)
        for p in res["panels"]:
            good = round(p["agreement"] * p["trials"])
            passed = good >= 18
            ok &= passed
            lines.append(f"{name[:-4]}/{p['panel']}={good}/{p['trials']}{'' if passed else '!'}")
    return ok, " ".join(lines)


@criterion(6, "invariance of D_{0.47,0.25} and nested domains")
def check_invariance_suite():
    rect = invariant_domain(EX61, 0.47, 0.25)
    rep = check_invariance(EX61, rect, 0.47, 0.999, 0.25, 0.999, n_samples=10_000, seed=0, n_controls=3)
    nested = check_nested_invariance(EX61, n_grid=5)
    ok = rep.violations == 0 and rep.n_points >= 10_000 and rep.n_controls == 9 and nested.violations == 0
    return ok, (f"{rep.n_points} points x {rep.n_controls} controls: {rep.violations} violations; "
                f"nested {nested.pairs} pairs: {nested.violations} violations")


@criterion(7, "Lyapunov descent above the floors")
def check_descent_suite():
    fl = global_floors(EX61)
    lo_a, lo_b = math.nextafter(fl.rho1, 1.0), math.nextafter(fl.rho2, 1.0)
    rep = check_descent(EX61, lo_a, 0.999, lo_b, 0.999, n_states=100_000, seed=0)
    return rep.violations == 0, (f"{rep.n_states} states x {rep.n_controls} controls: increase "
                                 f"{rep.increase_violations}, chain {rep.chain_violations}, "
                                 f"strict {rep.strict_violations}")


@criterion(8, "steps outside B(K, 0.5) never exceed S")
def check_step_bound():
    t0 = time.perf_counter()
    floor = descent_floor(EX61, 0.5, 0.47, 0.6, 0.25, 0.6)
    rep = steps_outside_ball(EX61, 0.5, 0.47, 0.6, 0.25, 0.6, n_starts=100, horizon=2000, seed=0,
                             bound=floor.S)
    elapsed = time.perf_counter() - t0
    ok = rep.starts == 100 and rep.max_outside <= floor.S and elapsed < 60.0
    return ok, f"max outside {rep.max_outside} <= S={floor.S}; {elapsed:.1f}s"


@criterion(9, "noise stabilises where the mean controls do not")
def check_design_region():
    cfg = _cfg("design_region.ini")
    cfg.values["run"]["candidates"], cfg.values["run"]["trials"] = 20, 50
    cfg.values["run"]["horizon"] = 5000
    with tempfile.TemporaryDirectory() as tmp:
        res, _ = experiments.run_montecarlo(cfg, tmp)
    rows = res["candidates"]
    noisy = sum(r["noisy"]["p_entered"] == 1.0 and r["noisy_all_converged"] for r in rows)
    mean = sum(r["mean_control_fails"] for r in rows)
    conv = sum(r["mean_control"]["p_converged"] for r in rows) / len(rows)
    ok = len(rows) == 20 and noisy == 20 and mean == 20
    return ok, (f"noisy runs all converged for {noisy}/20 candidates; mean controls failed for "
                f"{mean}/20 (mean-control convergence rate {conv:.2f})")


def _run_twice(argv, out):
    blobs = []
    for _ in range(2):
        assert cli.main(argv + ["--out", out]) in (0, 1)
        blob = {}
        for f in sorted(os.listdir(out)):
            with open(os.path.join(out, f), "rb") as fh:
                blob[f] = fh.read()
        blobs.append(blob)
    return blobs[0] == blobs[1], len(blobs[0])


@criterion(10, "repeated CLI runs are byte-identical")
def check_determinism():
    small = ["--seed", "11"]
    runs = {
        "report": ["report", "--config", os.path.join(CONFIGS, "thresholds_r3.ini")],
        "simulate": ["simulate", "--config", os.path.join(CONFIGS, "ramp_a034_b010.ini")],
        "verify": ["verify", "--config", os.path.join(CONFIGS, "verify_r3_box.ini"),
                   "--invariance-samples", "500", "--descent-states", "2000", "--starts", "5"],
        "montecarlo": ["montecarlo", "--config", os.path.join(CONFIGS, "ramp_r3_s4.ini"), "--trials", "3",
                       "--horizon", "1000"],
    }
    verdicts = {}
    for name, argv in runs.items():
        with tempfile.TemporaryDirectory() as tmp:
            with open(os.devnull, "w") as sink:
                old, sys.stdout = sys.stdout, sink
                try:
                    same, n = _run_twice(argv + small, tmp)
                finally:
                    sys.stdout = old
        verdicts[name] = same and n > 0
    return all(verdicts.values()), " ".join(f"{k}={'same' if v else 'DIFFERS'}" for k, v in verdicts.items())


def run(number):
    title, fn = CHECKS[number]
    ok, detail = fn()
    RESULTS[number] = (title, ok, detail)
    return ok, detail


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    ok, detail = run(number)
    assert ok, detail


def summary_lines():
    return [f"[{'PASS' if ok else 'FAIL'}] {n:2d} {title}: {detail}"
            for n, (title, ok, detail) in sorted(RESULTS.items())]


if __name__ == "__main__":
    for n in sorted(CHECKS):
        run(n)
        print(summary_lines()[-1], flush=True)
    sys.exit(0 if all(ok for _, ok, _ in RESULTS.values()) else 1)
