"""Command-line front door.

    fraclobc run <experiment> [--s --p --n --T --seed --out
                               --config cfg.json --set key=value ...]
    fraclobc validate <config.json>

Exit codes: 0 success, 1 operational error (bad config, solver failure),
2 a checked mathematical invariant was refuted.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, FraclobcError, InvariantViolation
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment

_FLAG_FIELDS = ("s", "p", "n", "T", "seed")


def _parse_set(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _load_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def parse_config(argv, require_experiment=True) -> ExperimentConfig:
    """Flags override file values override defaults."""
    parser = _build_run_parser()
    ns = parser.parse_args(argv)
    merged: dict = {}
    if ns.config:
        merged.update(_load_file(ns.config))
    if ns.experiment is not None:
        merged["experiment"] = ns.experiment
    for name in _FLAG_FIELDS:
        val = getattr(ns, name)
        if val is not None:
            merged[name] = val
    if ns.out is not None:
        merged["out_dir"] = ns.out
    overrides = dict(merged.pop("overrides", {}))
    overrides.update(_parse_set(ns.set))
    if "experiment" not in merged:
        raise ConfigError("no experiment given (flag or config file)")
    if "domain" in merged:
        merged["domain"] = tuple(merged["domain"])
    try:
        return ExperimentConfig(overrides=overrides, **merged)
    except TypeError as exc:
        raise ConfigError(f"unknown config field: {exc}")


def _build_run_parser():
    parser = argparse.ArgumentParser(prog="fraclobc run", add_help=False)
    parser.add_argument("experiment", nargs="?", choices=EXPERIMENTS)
    parser.add_argument("--s", type=float)
    parser.add_argument("--p", type=float)
    parser.add_argument("--n", type=int)
    parser.add_argument("--T", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=str)
    parser.add_argument("--config", type=str)
    parser.add_argument("--set", action="append", metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(__doc__)
        return 0
    command, rest = argv[0], argv[1:]
    try:
        if command == "run":
            cfg = parse_config(rest)
            run_experiment(cfg)
            print(f"ok: {cfg.experiment} -> {cfg.out_dir}")
            return 0
        if command == "validate":
            if len(rest) != 1:
                raise ConfigError("usage: fraclobc validate <config.json>")
            data = _load_file(rest[0])
            overrides = dict(data.pop("overrides", {}))
            if "domain" in data:
                data["domain"] = tuple(data["domain"])
            try:
                cfg = ExperimentConfig(overrides=overrides, **data)
            except TypeError as exc:
                raise ConfigError(f"unknown config field: {exc}")
            print(f"valid: {cfg.experiment} (window zone: {cfg.window.zone})")
            return 0
        raise ConfigError(f"unknown command {command!r}; use run or validate")
    except InvariantViolation as exc:
        print(f"invariant refuted: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except FraclobcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
