"""Config-driven experiment drivers behind the CLI.

Each ``run_*`` function returns a JSON-ready dict plus a violation flag and
writes its artefacts under the configured output directory.
"""
from __future__ import annotations

import math
import os
from typing import Optional

import numpy as np

from . import invariant as inv
from . import local, lyapunov, stochastic
from .config import Config, ConfigError, require_model
from .detectors import EXPECTATIONS, classify_tail
from .model import ControlBounds, ModelParams, ParameterError, equilibrium, random_schedule, simulate


def build_params(cfg: Config) -> ModelParams:
    try:
        return ModelParams(*require_model(cfg))
    except ParameterError as exc:
        raise ConfigError(f"[model] {exc}") from None


def _noise(vals: dict, seed: int) -> stochastic.NoiseSpec:
    kind = vals["noise"]
    try:
        if kind == "bernoulli":
            return stochastic.NoiseSpec.bernoulli(vals["shared"], seed)
        if kind == "discrete":
            if vals["values"] is None or vals["probabilities"] is None:
                raise ValueError("discrete noise needs values and probabilities")
            return stochastic.NoiseSpec(tuple(vals["values"]), tuple(vals["probabilities"]),
                                        vals["shared"], seed)
    except ValueError as exc:
        raise ConfigError(f"[control] noise: {exc}") from None
    raise ConfigError(f"[control] noise: unknown kind {kind!r}")


def build_control(vals: dict, seed: int = 0) -> stochastic.StochasticControl:
    mode = vals["mode"]
    if mode not in ("constant", "stochastic", "schedule", "design"):
        raise ConfigError(f"[control] mode: unknown mode {mode!r}")
    ell, ell_bar = (vals["ell"], vals["ell_bar"]) if mode == "stochastic" else (0.0, 0.0)
    try:
        return stochastic.StochasticControl(vals["alpha"], vals["beta"], ell, ell_bar, _noise(vals, seed))
    except ValueError as exc:
        raise ConfigError(f"[control] {exc}") from None


def control_box(vals: dict) -> ControlBounds:
    hi_a = vals["alpha_hi"] if vals["alpha_hi"] is not None else vals["alpha"]
    hi_b = vals["beta_hi"] if vals["beta_hi"] is not None else vals["beta"]
    try:
        return ControlBounds(vals["alpha"], hi_a, vals["beta"], hi_b)
    except ValueError as exc:
        raise ConfigError(f"[control] {exc}") from None


def build_sampler(cfg: Config, params: ModelParams, control: stochastic.StochasticControl, vals: dict):
    kind = cfg.get("start", "sampler")
    try:
        if kind == "point":
            return stochastic.PointSampler(vals["x0"], vals["y0"])
        if kind == "domain":
            return stochastic.domain_sampler(params, control.alpha - control.ell, control.beta - control.ell_bar)
        if kind == "rect":
            rect = cfg.get("start", "rect")
            if rect is None or len(rect) != 4:
                raise ValueError("rect sampler needs four numbers x_lo x_hi y_lo y_hi")
            return stochastic.RectSampler(inv.Rect(*rect))
    except ValueError as exc:
        raise ConfigError(f"[start] {exc}") from None
    raise ConfigError(f"[start] sampler: unknown sampler {kind!r}")


def _panels(cfg: Config):
    if cfg.panels:
        return [(name, cfg.panel_values(name)) for name in cfg.panels]
    vals = cfg.section("control")
    vals.update(x0=cfg.get("start", "x0"), y0=cfg.get("start", "y0"),
                n_steps=cfg.get("run", "n_steps"), horizon=cfg.get("run", "horizon"), expect=None)
    return [("", vals)]


def _finite(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


# ---------------------------------------------------------------- report

def _decimals(text: str) -> int:
    t = text.strip().lower().split("e")[0]
    return len(t.split(".")[1]) if "." in t else 0


def discrepancy_notes(computed: dict, reference: dict) -> list:
    """Compare printed reference values against computed ones at the printed precision."""
    notes = []
    for key in sorted(reference):
        text = reference[key]
        if key not in computed or computed[key] is None:
            notes.append({"key": key, "reference": float(text), "computed": None, "agrees": False,
                          "note": "no computed value with this name"})
            continue
        ref, val = float(text), computed[key]
        tol = 0.5 * 10.0 ** (-_decimals(text)) * (1.0 + 1e-9)
        agrees = abs(val - ref) <= tol
        note = "agrees at printed precision" if agrees else (
            f"printed {text} differs from computed {val:.6g} by {val - ref:+.3g}")
        notes.append({"key": key, "reference": ref, "computed": val, "agrees": agrees, "note": note})
    return notes


def _regime(params: ModelParams, ctl: stochastic.StochasticControl, thr, floors, vfloor, region) -> dict:
    verdict = local.constant_control_verdict(params, ctl.alpha, ctl.beta)
    out = {
        "alpha": ctl.alpha, "beta": ctl.beta, "ell": ctl.ell, "ell_bar": ctl.ell_bar,
        "local_sufficient": verdict.sufficient_status,
        "local_spectral_radius": verdict.spectral_radius,
        "locally_stable": verdict.spectral_radius_ok,
        "above_variable_floors": ctl.alpha > vfloor[0] and ctl.beta > vfloor[1],
        "above_lyapunov_floors": ctl.alpha > floors.rho1 and ctl.beta > floors.rho2,
        "above_entry_thresholds": None if thr is None else (ctl.alpha > thr.alpha_tilde and ctl.beta > thr.beta_tilde),
    }
    if not ctl.deterministic:
        for kind in local.NormKind:
            out[f"expected_log_norm_{kind.value}"] = stochastic.expected_log_norm(params, ctl, kind)
        out["in_design_region"] = None if region is None else region.contains(ctl.alpha, ctl.beta, ctl.ell, ctl.ell_bar)
    return out


def threshold_report(cfg: Config) -> dict:
    params = build_params(cfg)
    p, q = equilibrium(params)
    alpha_star, _ = local.local_thresholds(params)
    vals = cfg.section("control")
    alpha = vals["alpha"]
    beta_star = local.local_thresholds(params, alpha)[1] if alpha > alpha_star else None
    vfloor = local.variable_control_bounds(params)
    floors = lyapunov.global_floors(params)
    eq = local.equal_control_thresholds(params)
    thr = inv.entry_thresholds(params) if params.unstable_regime else None
    region = stochastic.design_region(params) if params.unstable_regime else None

    values = {
        "p": p, "q": q, "alpha_star": alpha_star, "beta_star": beta_star,
        "alpha_floor": vfloor[0], "beta_floor": vfloor[1],
        "alpha_tilde": None if thr is None else thr.alpha_tilde,
        "beta_tilde": None if thr is None else thr.beta_tilde,
        "alpha2": None if thr is None else thr.alpha2, "beta2": None if thr is None else thr.beta2,
        "rho1": floors.rho1, "rho2": floors.rho2, "eta1": floors.eta1, "eta2": floors.eta2,
        "lambda_min": eq.lambda_min, "lambda_max": eq.lambda_max, "A": eq.A, "B": eq.B,
    }
    formulas = {
        "p": "(r - a s) / (1 - a b)", "q": "(s - b r) / (1 - a b)",
        "alpha_star": "max(1 - 2/p, 0)",
        "beta_star": "max(1 - 2/(q(1-ab)) - 4ab/(q(1-ab)[(1-alpha)(1-ab)p - 2]), 0) at the configured alpha",
        "alpha_floor": "max(1 - 2/(p(1+a)), 0)", "beta_floor": "max(1 - 2/(q(1+b)), 0)",
        "alpha_tilde": "max((e^{r-1} - s/b)/(e^{r-1} - 2), 0)",
        "beta_tilde": "max((e^{s-1} - r/a)/(e^{s-1} - 2), 0)",
        "alpha2": "(e^{r-1} - r)/(e^{r-1} - 2)", "beta2": "(e^{s-1} - s)/(e^{s-1} - 2)",
        "rho1": "(e^{r-2} - 1)/(e^{r-2} + 1)", "rho2": "(e^{s-2} - 1)/(e^{s-2} + 1)",
        "eta1": "max(alpha_tilde, rho1)", "eta2": "max(beta_tilde, rho2)",
        "lambda_min": "(2 - p - q - sqrt((p-q)^2 + 4abpq))/2",
        "lambda_max": "(2 - p - q + sqrt((p-q)^2 + 4abpq))/2",
        "A": "(-1 - lambda_min)/(1 - lambda_min)", "B": "1 - min(2/(p(1+a)), 2/(q(1+b)))",
    }
    report = {
        "model": {"r": params.r, "s": params.s, "a": params.a, "b": params.b,
                  "r_above_two": params.r_above_two, "s_above_two": params.s_above_two},
        "thresholds": values,
        "formulas": formulas,
        "equal_controls_smaller": eq.smaller,
    }
    if region is not None:
        report["design_region"] = {
            "empty": region.empty, "reason": region.reason,
            "alpha_interval": list(region.alpha_interval), "beta_interval": list(region.beta_interval),
        }
    if 0.0 < alpha < 1.0 and alpha == vals["beta"]:
        iv = stochastic.equal_control_noise_interval(params, alpha)
        report["equal_control_noise_interval"] = {
            "alpha": alpha, "raw": list(iv.raw), "clipped": None if iv.clipped is None else list(iv.clipped)}
    regimes = {}
    for name, pv in _panels(cfg):
        try:
            ctl = build_control(pv)
        except ConfigError:
            raise
        regimes[name or "control"] = _regime(params, ctl, thr, floors, vfloor, region)
    report["regimes"] = regimes
    report["discrepancies"] = discrepancy_notes(values, cfg.reference)
    return report


def report_text(report: dict) -> str:
    lines = ["model: " + ", ".join(f"{k}={report['model'][k]}" for k in ("r", "s", "a", "b"))]
    for k, v in report["thresholds"].items():
        if v is not None:
            lines.append(f"  {k:<12} = {v:.6f}    {report['formulas'][k]}")
    if "design_region" in report:
        d = report["design_region"]
        lines.append("design region: " + (f"empty ({d['reason']})" if d["empty"] else
                                          f"alpha in ({d['alpha_interval'][0]:.5f}, {d['alpha_interval'][1]:.5f}), "
                                          f"beta in ({d['beta_interval'][0]:.5f}, {d['beta_interval'][1]:.5f})"))
    if "equal_control_noise_interval" in report:
        e = report["equal_control_noise_interval"]
        lines.append(f"equal-control noise interval at alpha={e['alpha']}: raw ({e['raw'][0]:.5f}, {e['raw'][1]:.5f})"
                     + ("" if e["clipped"] is None else f", admissible ({e['clipped'][0]:.5f}, {e['clipped'][1]:.5f})"))
    for name, reg in report["regimes"].items():
        lines.append(f"[{name}] " + ", ".join(f"{k}={v}" for k, v in reg.items()))
    for n in report["discrepancies"]:
        lines.append(f"reference {n['key']}: {n['note']}")
    return "\n".join(lines)


# ---------------------------------------------------------------- simulate

def write_csv(path: str, traj) -> None:
    rows = ["step,x,y,alpha_applied,beta_applied"]
    n_ctl = traj.controls.shape[0]
    for i, (x, y) in enumerate(traj.states.tolist()):
        if i < n_ctl:
            al, be = traj.controls[i]
            rows.append(f"{traj.first_step + i},{x:.17g},{y:.17g},{al:.17g},{be:.17g}")
        else:
            rows.append(f"{traj.first_step + i},{x:.17g},{y:.17g},,")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


def plot_script(csv_name: str, title: str, K) -> str:
    stem = os.path.splitext(csv_name)[0]
    return "\n".join([
        "set datafile separator ','",
        "set terminal pngcairo size 1200,450",
        f"set output '{stem}.png'",
        f"set multiplot layout 1,2 title '{title}'",
        "set xlabel 'n'",
        f"plot '{csv_name}' every ::1 using 1:2 with points pt 7 ps 0.3 title 'x', \\",
        f"     '' every ::1 using 1:3 with points pt 7 ps 0.3 title 'y'",
        "set xlabel 'x'", "set ylabel 'y'",
        f"plot '{csv_name}' every ::1 using 2:3 with points pt 7 ps 0.3 title 'orbit', \\",
        f"     '-' with points pt 3 ps 2 title 'K'",
        f"{K[0]!r} {K[1]!r}", "e",
        "unset multiplot", "",
    ])


def _file_stem(cfg: Config, panel: str) -> str:
    label = cfg.get("output", "label")
    return f"{label}_{panel}" if panel else label


def _classify(states, K, cfg: Config) -> str:
    return classify_tail(states, K, cfg.get("run", "tol"), cfg.get("run", "window")).value


def run_simulate(cfg: Config, out_dir: str) -> tuple:
    params = build_params(cfg)
    K = equilibrium(params)
    seed = cfg.get("run", "seed")
    trial_seed = stochastic.derive_seed(seed, 0)
    runs = []
    for name, vals in _panels(cfg):
        ctl = build_control(vals, trial_seed)
        n = vals["n_steps"]
        if n < 0:
            raise ConfigError("[run] n_steps: must be nonnegative")
        start = build_sampler(cfg, params, ctl, vals)(stochastic.start_rng(trial_seed))
        if vals["mode"] == "schedule":
            sched = random_schedule(control_box(vals), n, trial_seed)
            traj = simulate(params, sched, start, n)
        else:
            traj = stochastic.simulate_stochastic(params, ctl, start, n)
        stem = _file_stem(cfg, name)
        csv_name = stem + ".csv"
        write_csv(os.path.join(out_dir, csv_name), traj)
        entry = {"panel": name or None, "csv": csv_name, "seed": trial_seed, "n_steps": n,
                 "start": list(start), "final": list(traj.final),
                 "outcome": _classify(traj.states[-max(n // 2, 2 * cfg.get("run", "window")):], K, cfg),
                 "expect": vals["expect"]}
        if vals["expect"] is not None:
            entry["matches"] = entry["outcome"] in {o.value for o in _expected(vals["expect"])}
        if cfg.get("output", "plot"):
            gp = stem + ".gp"
            with open(os.path.join(out_dir, gp), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(plot_script(csv_name, stem, K))
            entry["plot"] = gp
        runs.append(entry)
    return {"equilibrium": list(K), "runs": runs}, False


def _expected(label: str):
    try:
        return EXPECTATIONS[label]
    except KeyError:
        raise ConfigError(f"expect: unknown label {label!r}; have {sorted(EXPECTATIONS)}") from None


# ---------------------------------------------------------------- verify

def _verify_box(cfg: Config):
    box = cfg.get("verify", "box")
    if box is None:
        b = control_box(cfg.section("control"))
        return b.alpha_lo, b.alpha_hi, b.beta_lo, b.beta_hi
    if len(box) != 4:
        raise ConfigError("[verify] box: needs alpha_lo alpha_hi beta_lo beta_hi")
    try:
        ControlBounds(*box)
    except ValueError as exc:
        raise ConfigError(f"[verify] box: {exc}") from None
    return tuple(box)


def _witness(point, control):
    return None if point is None else {"point": list(point), "control": list(control)}


def run_verify(cfg: Config, out_dir: str) -> tuple:
    params = build_params(cfg)
    a_lo, a_hi, b_lo, b_hi = _verify_box(cfg)
    seed = cfg.get("run", "seed")
    suites = cfg.get("verify", "suites").split()
    unknown = set(suites) - {"invariance", "nested", "caps", "descent", "norm", "steps"}
    if unknown:
        raise ConfigError(f"[verify] suites: unknown {sorted(unknown)}")
    out = {"box": [a_lo, a_hi, b_lo, b_hi], "suites": {}}
    bad = False
    thr = inv.entry_thresholds(params) if params.unstable_regime else None
    inv_ok = thr is not None and a_lo > thr.alpha_tilde and b_lo > thr.beta_tilde

    def skip(name, why):
        out["suites"][name] = {"skipped": why}

    if "invariance" in suites:
        if inv_ok:
            rect = inv.invariant_domain(params, a_lo, b_lo)
            rep = inv.check_invariance(params, rect, a_lo, a_hi, b_lo, b_hi,
                                       cfg.get("verify", "invariance_samples"), seed)
            out["suites"]["invariance"] = {
                "rect": [rect.x_lo, rect.x_hi, rect.y_lo, rect.y_hi], "points": rep.n_points,
                "controls": rep.n_controls, "violations": rep.violations,
                "worst_excess": rep.worst_excess, "witness": _witness(rep.worst_point, rep.worst_control)}
            bad |= not rep.ok
        else:
            skip("invariance", "box lower corner not above the entry thresholds")
    if "nested" in suites:
        if thr is not None:
            rep = inv.check_nested_invariance(params, cfg.get("verify", "nested_grid"), seed=seed)
            out["suites"]["nested"] = {"pairs": rep.pairs, "violations": rep.violations, "witness": rep.worst}
            bad |= not rep.ok
        else:
            skip("nested", "needs r > 2 and s > 2")
    if "caps" in suites:
        rep = inv.check_caps(params, a_lo, a_hi, b_lo, b_hi, cfg.get("verify", "invariance_samples"), seed)
        out["suites"]["caps"] = {"points": rep.n_points, "cap_violations": rep.cap_violations,
                                 "ceiling_violations": rep.ceiling_violations}
        bad |= not rep.ok
    if "descent" in suites:
        rep = lyapunov.check_descent(params, a_lo, a_hi, b_lo, b_hi, cfg.get("verify", "descent_states"), seed)
        fl = lyapunov.global_floors(params)
        out["suites"]["descent"] = {
            "states": rep.n_states, "controls": rep.n_controls,
            "above_floors": a_lo > fl.rho1 and b_lo > fl.rho2,
            "increase_violations": rep.increase_violations, "chain_violations": rep.chain_violations,
            "strict_violations": rep.strict_violations, "violations": rep.violations,
            "witness": _witness(rep.worst_point, rep.worst_control) if rep.violations else None,
            "worst_increment": rep.worst_value}
        bad |= not rep.ok
    if "norm" in suites:
        fa, fb = local.variable_control_bounds(params)
        lo_a, lo_b = max(a_lo, math.nextafter(fa, 1.0)), max(b_lo, math.nextafter(fb, 1.0))
        if lo_a <= a_hi and lo_b <= b_hi:
            bounds = ControlBounds(lo_a, a_hi, lo_b, b_hi)
            worst, count = 0.0, 0
            witness = None
            n_sched = cfg.get("verify", "schedules")
            for k in range(n_sched):
                sched = random_schedule(bounds, cfg.get("verify", "schedule_steps"), [seed, k])
                for al, be in zip(sched.alphas.tolist(), sched.betas.tolist()):
                    nrm = local.matrix_norm(local.jacobian(params, al, be), local.NormKind.MAX)
                    if nrm >= 1.0:
                        count += 1
                        witness = witness or {"control": [al, be], "norm": nrm}
                    worst = max(worst, nrm)
            out["suites"]["norm"] = {
                "box": [lo_a, a_hi, lo_b, b_hi], "schedules": n_sched, "violations": count,
                "max_norm": worst, "corner_bound": local.max_norm_margin(params, lo_a, a_hi, lo_b, b_hi),
                "witness": witness}
            bad |= count > 0
        else:
            skip("norm", "box does not reach above the variable-control floors")
    if "steps" in suites:
        fl = lyapunov.global_floors(params)
        if inv_ok and a_lo >= fl.rho1 and b_lo >= fl.rho2 and a_hi < 1.0 and b_hi < 1.0:
            d0 = cfg.get("run", "delta0")
            floor = lyapunov.descent_floor(params, d0, a_lo, a_hi, b_lo, b_hi)
            rep = lyapunov.steps_outside_ball(params, d0, a_lo, a_hi, b_lo, b_hi,
                                              cfg.get("run", "starts"), cfg.get("run", "horizon"),
                                              seed, bound=floor.S)
            out["suites"]["steps"] = {
                "delta0": d0, "S": floor.S, "psi_floor": floor.psi_floor, "c_bold": floor.c_bold,
                "Mbar": floor.Mbar, "residual_bound": floor.residual_bound, "starts": rep.starts,
                "horizon": rep.horizon, "max_outside": rep.max_outside, "mean_outside": rep.mean_outside,
                "violations": 0 if rep.ok else 1}
            bad |= not rep.ok
        else:
            skip("steps", "box not above both the Lyapunov floors and the entry thresholds")
    out["violations"] = bad
    return out, bad


# ---------------------------------------------------------------- Monte Carlo

def _trial_dict(t) -> dict:
    return {"index": t.index, "seed": t.seed, "start": list(t.start), "tau": t.tau,
            "converged": t.converged, "outcome": t.outcome, "final": list(t.final)}


def _mc_summary(rep, with_trials: bool = True) -> dict:
    out = {"trials": rep.n, "horizon": rep.horizon, "delta": rep.delta,
           "p_entered": rep.p_entered, "p_converged": rep.p_converged,
           "mean_tau": rep.mean_tau, "max_tau": rep.max_tau,
           "tau_histogram": rep.tau_histogram(), "outcomes": rep.outcome_counts()}
    if with_trials:
        out["per_trial"] = [_trial_dict(t) for t in rep.trials]
    return out


def _mc(cfg, params, ctl, vals, horizon, base_seed):
    sampler = build_sampler(cfg, params, ctl, vals)
    return stochastic.monte_carlo_convergence(
        params, ctl, sampler, cfg.get("run", "delta"), horizon, cfg.get("run", "trials"), base_seed,
        tail=cfg.get("run", "tail"), tol=cfg.get("run", "tol"), window=cfg.get("run", "window"))


def run_montecarlo(cfg: Config, out_dir: str) -> tuple:
    params = build_params(cfg)
    seed = cfg.get("run", "seed")
    mode = cfg.get("control", "mode")
    if mode == "design" and not cfg.panels:
        return _run_design(cfg, params, seed)
    sweep = cfg.section("sweep")
    if sweep["ells"] is not None or sweep["ell_bars"] is not None:
        return _run_sweep(cfg, params, seed, sweep)
    bad = False
    panels = []
    threshold = cfg.get("run", "agreement")
    for name, vals in _panels(cfg):
        ctl = build_control(vals)
        rep = _mc(cfg, params, ctl, vals, vals["horizon"], seed)
        entry = {"panel": name or None, "alpha": ctl.alpha, "beta": ctl.beta, "ell": ctl.ell,
                 "ell_bar": ctl.ell_bar, "expect": vals["expect"], **_mc_summary(rep)}
        if vals["expect"] is not None:
            allowed = {o.value for o in _expected(vals["expect"])}
            agree = sum(t.outcome in allowed for t in rep.trials) / rep.n
            entry["agreement"] = agree
            entry["meets_agreement"] = agree >= threshold
            bad |= agree < threshold
        panels.append(entry)
    return {"agreement_required": threshold, "panels": panels, "violations": bad}, bad


def _run_sweep(cfg, params, seed, sweep):
    base = cfg.section("control")
    ells = sweep["ells"] if sweep["ells"] is not None else [base["ell"]]
    ell_bars = sweep["ell_bars"] if sweep["ell_bars"] is not None else [base["ell_bar"]]
    vals = {**base, "x0": cfg.get("start", "x0"), "y0": cfg.get("start", "y0")}
    grid = []
    for l in ells:
        for lb in ell_bars:
            pv = dict(vals, ell=l, ell_bar=lb, mode="stochastic" if (l or lb) else "constant")
            ctl = build_control(pv)
            rep = _mc(cfg, params, ctl, pv, cfg.get("run", "horizon"), seed)
            grid.append({"ell": l, "ell_bar": lb, **_mc_summary(rep, with_trials=False)})
    return {"sweep": grid, "violations": False}, False


def _run_design(cfg, params, seed):
    region = stochastic.design_region(params)
    if region.empty:
        return {"design_region": {"empty": True, "reason": region.reason}, "violations": True}, True
    base = cfg.section("control")
    vals = {**base, "x0": cfg.get("start", "x0"), "y0": cfg.get("start", "y0")}
    horizon = cfg.get("run", "horizon")
    cands = region.sample(cfg.get("run", "candidates"), seed)
    rows = []
    bad = False
    for i, (al, be, l, lb) in enumerate(cands):
        noisy = stochastic.StochasticControl(al, be, l, lb, _noise(vals, 0))
        mean = noisy.mean_control()
        cseed = stochastic.derive_seed(seed, i)
        # both runs start from the same points: the domain of the lowest realisable controls
        sampler = stochastic.domain_sampler(params, al - l, be - lb) \
            if cfg.get("start", "sampler") == "domain" else build_sampler(cfg, params, noisy, vals)
        kw = dict(tail=cfg.get("run", "tail"), tol=cfg.get("run", "tol"), window=cfg.get("run", "window"))
        rn = stochastic.monte_carlo_convergence(params, noisy, sampler, cfg.get("run", "delta"), horizon,
                                                cfg.get("run", "trials"), cseed, **kw)
        rm = stochastic.monte_carlo_convergence(params, mean, sampler, cfg.get("run", "delta"), horizon,
                                                cfg.get("run", "trials"), cseed, **kw)
        d = region.derived(al, be, l, lb)
        row = {"candidate": i, "alpha": al, "beta": be, "ell": l, "ell_bar": lb, "seed": cseed,
               "derived": {"epsilon": d.epsilon, "alpha_lo": d.alpha_lo, "beta_lo": d.beta_lo,
                           "alpha_hi": d.alpha_hi, "beta_hi": d.beta_hi},
               "expected_log_norm_l2": stochastic.expected_log_norm(params, noisy, local.NormKind.SPECTRAL),
               "noisy": _mc_summary(rn, with_trials=False),
               "mean_control": _mc_summary(rm, with_trials=False),
               "noisy_all_converged": rn.p_converged == 1.0,
               "mean_control_fails": rm.p_converged < 1.0}
        bad |= not (row["noisy_all_converged"] and row["mean_control_fails"])
        rows.append(row)
    out = {"design_region": {"empty": False, "alpha_interval": list(region.alpha_interval),
                             "beta_interval": list(region.beta_interval)},
           "candidates": rows,
           "noisy_all_converged": all(r["noisy_all_converged"] for r in rows),
           "mean_controls_all_fail": all(r["mean_control_fails"] for r in rows),
           "violations": bad}
    return out, bad
