"""INI experiment configs with a typed schema, defaults and command-line overrides."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Any, Optional


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> list:
    parts = [p for p in text.replace(",", " ").split() if p]
    return [float(p) for p in parts]


PARSERS = {"float": float, "int": int, "str": str, "bool": _bool, "floats": _floats}

# section -> key -> (type, default, help); default None means "unset"
SCHEMA = {
    "model": {
        "r": ("float", None, "growth rate of species 1"),
        "s": ("float", None, "growth rate of species 2"),
        "a": ("float", None, "effect of y on x"),
        "b": ("float", None, "effect of x on y"),
    },
    "control": {
        "mode": ("str", "constant", "constant | stochastic | schedule | design"),
        "alpha": ("float", 0.0, "control intensity on x (mean for stochastic)"),
        "beta": ("float", 0.0, "control intensity on y (mean for stochastic)"),
        "alpha_hi": ("float", None, "upper alpha for schedule mode and box checks"),
        "beta_hi": ("float", None, "upper beta for schedule mode and box checks"),
        "ell": ("float", 0.0, "noise amplitude on alpha"),
        "ell_bar": ("float", 0.0, "noise amplitude on beta"),
        "noise": ("str", "bernoulli", "bernoulli | discrete"),
        "values": ("floats", None, "discrete noise support"),
        "probabilities": ("floats", None, "discrete noise probabilities"),
        "shared": ("bool", False, "drive both controls with one noise stream"),
    },
    "start": {
        "x0": ("float", 4.0, "initial x"),
        "y0": ("float", 1.1, "initial y"),
        "sampler": ("str", "point", "point | domain | rect"),
        "rect": ("floats", None, "x_lo x_hi y_lo y_hi for the rect sampler"),
    },
    "run": {
        "n_steps": ("int", 500, "steps for simulate"),
        "trials": ("int", 20, "Monte Carlo trials per panel or candidate"),
        "horizon": ("int", 5000, "Monte Carlo horizon"),
        "delta": ("float", 0.05, "hitting-ball radius"),
        "tol": ("float", 1e-3, "detector tolerance"),
        "window": ("int", 50, "detector window"),
        "tail": ("int", None, "states kept for classification (default horizon/2)"),
        "seed": ("int", 0, "base seed"),
        "agreement": ("float", 0.9, "required fraction of trials matching the expectation"),
        "candidates": ("int", 20, "design-region candidates"),
        "delta0": ("float", 0.5, "ball radius for the step bound"),
        "starts": ("int", 100, "starts for the step-bound check"),
    },
    "verify": {
        "box": ("floats", None, "alpha_lo alpha_hi beta_lo beta_hi"),
        "invariance_samples": ("int", 10_000, "points for the invariance suite"),
        "nested_grid": ("int", 5, "grid size for nested invariance"),
        "descent_states": ("int", 100_000, "states for the descent suite"),
        "schedules": ("int", 100, "random schedules for the norm suite"),
        "schedule_steps": ("int", 100, "steps per random schedule"),
        "suites": ("str", "invariance nested caps descent norm steps", "suites to run"),
    },
    "output": {
        "dir": ("str", "out", "output directory"),
        "plot": ("bool", True, "write a gnuplot script next to each CSV"),
        "label": ("str", "run", "file name stem"),
    },
    "sweep": {
        "ells": ("floats", None, "ell values"),
        "ell_bars": ("floats", None, "ell_bar values"),
    },
}

PANEL_KEYS = {**{k: SCHEMA["control"][k] for k in SCHEMA["control"]},
              "x0": SCHEMA["start"]["x0"], "y0": SCHEMA["start"]["y0"],
              "n_steps": SCHEMA["run"]["n_steps"], "horizon": SCHEMA["run"]["horizon"],
              "expect": ("str", None, "expected outcome label")}


def flag_index():
    """``--key-with-dashes`` -> (section, key) for every schema field."""
    out = {}
    for sec, keys in SCHEMA.items():
        for key in keys:
            flag = key.replace("_", "-")
            if flag in out:
                raise AssertionError(f"duplicate flag {flag}")
            out[flag] = (sec, key)
    return out


@dataclass
class Config:
    values: dict
    panels: dict = field(default_factory=dict)
    reference: dict = field(default_factory=dict)
    source: Optional[str] = None

    def get(self, section: str, key: str) -> Any:
        return self.values[section][key]

    def section(self, name: str) -> dict:
        return dict(self.values[name])

    def panel_values(self, name: str) -> dict:
        """Control, start and run fields with the panel's overrides applied."""
        merged = {k: self.values["control"][k] for k in SCHEMA["control"]}
        merged.update(x0=self.values["start"]["x0"], y0=self.values["start"]["y0"],
                      n_steps=self.values["run"]["n_steps"], horizon=self.values["run"]["horizon"],
                      expect=None)
        merged.update(self.panels[name])
        return merged

    def to_dict(self) -> dict:
        out = {sec: dict(v) for sec, v in self.values.items()}
        out["panels"] = {k: dict(v) for k, v in self.panels.items()}
        out["reference"] = dict(self.reference)
        return out

    def to_ini(self) -> str:
        """Serialise back to INI; ``load_string(to_ini())`` reproduces the config."""
        lines = []

        def fmt(v):
            if isinstance(v, bool):
                return "true" if v else "false"
            if isinstance(v, list):
                return " ".join(repr(float(x)) for x in v)
            if isinstance(v, float):
                return repr(v)
            return str(v)

        for sec, vals in self.values.items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {fmt(v)}" for k, v in vals.items() if v is not None)
            lines.append("")
        for name, vals in self.panels.items():
            lines.append(f"[panel.{name}]")
            lines.extend(f"{k} = {fmt(v)}" for k, v in vals.items())
            lines.append("")
        if self.reference:
            lines.append("[reference]")
            lines.extend(f"{k} = {v}" for k, v in self.reference.items())
            lines.append("")
        return "\n".join(lines)


def _parse(kind: str, text: str, where: str):
    try:
        return PARSERS[kind](text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _read(parser: configparser.ConfigParser, source: str) -> Config:
    values = {sec: {k: spec[1] for k, spec in keys.items()} for sec, keys in SCHEMA.items()}
    panels, reference = {}, {}
    for sec in parser.sections():
        items = parser[sec]
        if sec == "reference":
            for k, v in items.items():
                try:
                    float(v)
                except ValueError:
                    raise ConfigError(f"[reference] {k}: not a number: {v!r}") from None
                reference[k] = v.strip()
            continue
        if sec.startswith("panel."):
            name = sec[len("panel."):]
            if not name:
                raise ConfigError(f"[{sec}]: empty panel name")
            panel = {}
            for k, v in items.items():
                if k not in PANEL_KEYS:
                    raise ConfigError(f"[{sec}] {k}: unknown panel key")
                panel[k] = _parse(PANEL_KEYS[k][0], v, f"[{sec}] {k}")
            panels[name] = panel
            continue
        if sec not in SCHEMA:
            raise ConfigError(f"[{sec}]: unknown section")
        for k, v in items.items():
            if k not in SCHEMA[sec]:
                raise ConfigError(f"[{sec}] {k}: unknown key")
            values[sec][k] = _parse(SCHEMA[sec][k][0], v, f"[{sec}] {k}")
    return Config(values, panels, reference, source)


def _parser() -> configparser.ConfigParser:
    p = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    p.optionxform = str
    return p


def load(path: str) -> Config:
    parser = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return _read(parser, path)


def load_string(text: str, source: str = "<string>") -> Config:
    parser = _parser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return _read(parser, source)


def default_config() -> Config:
    return load_string("")


def apply_overrides(cfg: Config, overrides: dict) -> Config:
    """``overrides`` maps (section, key) to raw strings from the command line."""
    for (sec, key), text in overrides.items():
        cfg.values[sec][key] = _parse(SCHEMA[sec][key][0], text, f"--{key.replace('_', '-')}")
    return cfg


def require_model(cfg: Config):
    missing = [k for k in ("r", "s", "a", "b") if cfg.values["model"][k] is None]
    if missing:
        raise ConfigError(f"[model] missing {', '.join(missing)}")
    m = cfg.values["model"]
    return m["r"], m["s"], m["a"], m["b"]
