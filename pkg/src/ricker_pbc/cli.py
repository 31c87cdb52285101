"""Command-line front end: ``ricker-pbc {report,simulate,verify,montecarlo}``.

Exit status 0 on success, 1 when a property check or expectation fails,
2 for an invalid config.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiments
from .config import SCHEMA, ConfigError, apply_overrides, default_config, flag_index, load

COMMANDS = {
    "report": experiments.threshold_report,
    "simulate": experiments.run_simulate,
    "verify": experiments.run_verify,
    "montecarlo": experiments.run_montecarlo,
}

# flags handled by the common options rather than the generated ones
_COMMON = {"seed": ("run", "seed"), "dir": ("output", "dir")}


def _add_common(sp):
    sp.add_argument("--config", metavar="PATH", help="INI experiment config")
    sp.add_argument("--seed", metavar="U64", help="base seed (overrides [run] seed)")
    sp.add_argument("--out", metavar="DIR", help="output directory (overrides [output] dir)")
    group = sp.add_argument_group("field overrides")
    for flag, (sec, key) in flag_index().items():
        if key in _COMMON:
            continue
        kind, default, text = SCHEMA[sec][key]
        group.add_argument(f"--{flag}", dest=f"ov__{sec}__{key}", metavar=kind.upper(),
                           help=f"[{sec}] {text} (default {default})")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ricker-pbc",
                                 description="Planar Ricker map under prediction-based control")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"report": "print every threshold for the configured model",
             "simulate": "write trajectory CSVs and plot scripts",
             "verify": "run invariance, descent and norm property suites",
             "montecarlo": "seeded Monte Carlo convergence campaigns"}
    for name in COMMANDS:
        _add_common(sub.add_parser(name, help=helps[name]))
    return ap


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config) if args.config else default_config()
        overrides = {}
        for name, value in vars(args).items():
            if name.startswith("ov__") and value is not None:
                _, sec, key = name.split("__")
                overrides[(sec, key)] = value
        if args.seed is not None:
            overrides[_COMMON["seed"]] = args.seed
        if args.out is not None:
            overrides[_COMMON["dir"]] = args.out
        apply_overrides(cfg, overrides)
        if cfg.get("run", "seed") < 0:
            raise ConfigError("--seed: must be nonnegative")
        out_dir = cfg.get("output", "dir")
        os.makedirs(out_dir, exist_ok=True)
        label = cfg.get("output", "label")
        if args.command == "report":
            result, bad = COMMANDS["report"](cfg), False
            print(experiments.report_text(result))
        else:
            result, bad = COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    path = os.path.join(out_dir, f"{label}_{args.command}.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dump({"command": args.command, "config": cfg.to_dict(), "result": result}))
    if args.command != "report":
        print(f"{args.command}: {'violations found' if bad else 'ok'} -> {path}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
