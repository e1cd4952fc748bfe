"""Command-line front end.

Subcommands: eigs, deviation, coverage, compare, bounds, rates.
Configuration is a JSON file (--config); unknown fields are rejected.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bounds, experiments
from .kernelmodel import (DEFAULT_K_MAX, DEFAULT_L_MAX, RegularityClass,
                          named_kernel)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_COMMON_FIELDS = {"kernel", "seed", "alpha", "trials", "K_max", "L_max"}
_FIELDS = {
    "eigs": _COMMON_FIELDS | {"top"},
    "deviation": _COMMON_FIELDS | {"n_grid", "indices"},
    "coverage": _COMMON_FIELDS | {"n", "R", "gram_only"},
    "compare": _COMMON_FIELDS | {"n", "indices"},
    "bounds": _COMMON_FIELDS | {"n", "i", "R", "regularity"},
    "rates": {"deltas", "betas", "s"},
}


class ConfigError(Exception):
    pass


def load_config(path, study: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(cfg) - _FIELDS[study]
    if unknown:
        raise ConfigError(f"unknown config fields for {study}: {sorted(unknown)}")
    return cfg


def build_kernel(cfg: dict):
    spec = cfg.get("kernel")
    if spec is None:
        raise ConfigError("config requires a 'kernel' field")
    try:
        return named_kernel(spec, k_max=int(cfg.get("K_max", DEFAULT_K_MAX)),
                            l_max=int(cfg.get("L_max", DEFAULT_L_MAX)))
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid kernel spec: {exc}") from exc


def resolve_out(args) -> Path:
    out = Path(args.out or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


def resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("KERNSPEC_THREADS")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"KERNSPEC_THREADS is not an integer: {env!r}") from exc
    return 1


def _resolved(cfg, args, study):
    return {"study": study, "config": cfg, "seed": _seed(cfg, args),
            "version": __version__}


def _seed(cfg, args) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def cmd_eigs(cfg, args):
    kernel = build_kernel(cfg)
    out = resolve_out(args)
    top = int(cfg.get("top", 50))
    lam = kernel.eigenvalues[:top]
    rows = []
    for i, v in enumerate(lam, start=1):
        level = int(kernel.levels[i - 1]) if kernel.levels is not None else ""
        rows.append((i, repr(float(v)), level))
    with open(out / "eigenvalues.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "eigenvalue", "level"])
        writer.writerows(rows)
    payload = _resolved(cfg, args, "eigs")
    payload["eigenvalues"] = [float(v) for v in lam]
    payload["tail_mass_diagnostic"] = kernel.meta.get("tail_mass_beyond_l_max")
    payload["hypothesis_h"] = kernel.hypothesis_h
    _write_json(out / "eigenvalues.json", payload)
    return EXIT_OK


def _run_study(study_fn, cfg, args, study, **kwargs):
    out = resolve_out(args)
    result = study_fn(**kwargs)
    result.config.update({"version": __version__})
    result.write_csv(out / f"{study}.csv")
    result.write_json(out / f"{study}.json")
    return EXIT_OK


def cmd_deviation(cfg, args):
    kernel = build_kernel(cfg)
    try:
        return _run_study(
            experiments.deviation_study, cfg, args, "deviation",
            kernel=kernel, n_grid=cfg["n_grid"], indices=cfg["indices"],
            trials=int(cfg.get("trials", 200)), alpha=float(cfg.get("alpha", 0.1)),
            seed=_seed(cfg, args), threads=resolve_threads(args))
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc


def cmd_coverage(cfg, args):
    kernel = build_kernel(cfg)
    try:
        return _run_study(
            experiments.coverage_study, cfg, args, "coverage",
            kernel=kernel, n=int(cfg["n"]), R=int(cfg["R"]),
            alpha=float(cfg.get("alpha", 0.1)),
            trials=int(cfg.get("trials", 200)),
            seed=_seed(cfg, args), threads=resolve_threads(args),
            gram_only=bool(cfg.get("gram_only", False)))
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc


def cmd_compare(cfg, args):
    kernel = build_kernel(cfg)
    try:
        return _run_study(
            experiments.relative_vs_absolute, cfg, args, "compare",
            kernel=kernel, n=int(cfg["n"]), indices=cfg["indices"],
            trials=int(cfg.get("trials", 200)),
            seed=_seed(cfg, args), threads=resolve_threads(args))
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc


def cmd_bounds(cfg, args):
    kernel = build_kernel(cfg)
    out = resolve_out(args)
    reg = None
    if "regularity" in cfg:
        r = dict(cfg["regularity"])
        try:
            reg = RegularityClass(r.pop("tag"), float(r.pop("delta")),
                                  int(r.pop("s", 0)))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"invalid regularity spec: {exc}") from exc
        if r:
            raise ConfigError(f"unknown regularity fields: {sorted(r)}")
    try:
        n, i, big_r = int(cfg["n"]), int(cfg["i"]), int(cfg["R"])
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc
    if big_r >= n:
        raise ConfigError(
            f"R = {big_r} >= n = {n}: the event bound requires R < n")
    report = bounds.bound_report(kernel, i=i, n=n,
                                 alpha=float(cfg.get("alpha", 0.1)), R=big_r,
                                 reg=reg)
    with open(out / "bounds.json", "w") as fh:
        fh.write(report.to_json(**_resolved(cfg, args, "bounds")))
    return EXIT_OK


def cmd_rates(cfg, args):
    out = resolve_out(args)
    try:
        deltas = cfg["deltas"]
        betas = cfg["betas"]
    except KeyError as exc:
        raise ConfigError(f"missing config field: {exc}") from exc
    s = int(cfg.get("s", 0))
    try:
        regs = [RegularityClass("H1", float(d), s) for d in deltas]
        experiments.emit_rate_table(regs, betas, out / "rates.csv")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    _write_json(out / "rates.json", _resolved(cfg, args, "rates"))
    return EXIT_OK


_COMMANDS = {
    "eigs": cmd_eigs,
    "deviation": cmd_deviation,
    "coverage": cmd_coverage,
    "compare": cmd_compare,
    "bounds": cmd_bounds,
    "rates": cmd_rates,
}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernspec",
        description="Kernel-matrix spectrum laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None, help="RNG seed override")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: KERNSPEC_THREADS or 1)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
