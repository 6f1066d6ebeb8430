"""Batch experiment runner.

Usage::

    pathorder <command> --config cfg.json [--out DIR] [--seed N] [--format json|csv]

Commands: simulate, maxent, entropy, order, ergodic, pipeline.
Exit status is 0 on success, 2 for configuration errors and 3 for
runtime failures.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path as FsPath

import jsonschema
import numpy as np

from pathorder import __version__
from pathorder._backend import BACKEND
from pathorder.dynamics import (
    Box,
    CellPartition,
    MapSystem,
    random_orbit,
    space_average,
    steady_state_check,
    time_average,
)
from pathorder.ensemble import estimate_distribution, simulate_paths
from pathorder.entropy import (
    ThermoAccount,
    entropy_generation_statistical,
    entropy_report,
)
from pathorder.io import (
    PATH_DISTRIBUTION_SCHEMA,
    THERMO_ACCOUNT_SCHEMA,
    canonical_hash,
    distribution_from_dict,
    distribution_to_dict,
    dumps,
    ensemble_to_dict,
    paths_csv,
    probability_svg,
)
from pathorder.maxent import partition_identity_check, solve_maxent
from pathorder.stochorder import (
    DiscreteRV,
    NotOrderedError,
    build_coupling,
    compare_paths,
    gradient_order,
    greatest_path,
    usual_order,
)

COMMANDS = ("simulate", "maxent", "entropy", "order", "ergodic", "pipeline")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


_RV_SCHEMA = {
    "type": "object",
    "required": ["support", "probs"],
    "properties": {"support": {"type": "array", "items": {"type": "number"}},
                   "probs": {"type": "array", "items": {"type": "number"}}},
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ExperimentConfig",
    "type": "object",
    "required": ["seed"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "kB": {"type": "number", "exclusiveMinimum": 0},
        "system": {
            "type": "object",
            "required": ["map"],
            "properties": {
                "map": {"enum": ["cat", "doubling", "standard"]},
                "params": {"type": "object", "additionalProperties": {"type": "number"}},
                "dt": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "partition": {
            "type": "object",
            "required": ["resolution"],
            "properties": {"resolution": {"type": "array", "minItems": 2, "maxItems": 2,
                                          "items": {"type": "integer", "minimum": 1}}},
        },
        "source": {"type": "integer", "minimum": 0},
        "target": {"type": "integer", "minimum": 0},
        "L": {"type": "integer", "minimum": 1},
        "horizon": {"type": "integer", "minimum": 1},
        "workers": {"type": "integer", "minimum": 1},
        "svg": {"type": "boolean"},
        "actions": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "target_mean": {"type": "number"},
        "input": {"type": "string"},
        "account": THERMO_ACCOUNT_SCHEMA,
        "distribution": PATH_DISTRIBUTION_SCHEMA,
        "X": _RV_SCHEMA,
        "Y": _RV_SCHEMA,
        "pairs": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                             "items": {"type": "integer", "minimum": 0}}},
        "n": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 1},
        "observables": {"type": "array", "items": {"enum": ["x", "x2", "sin2pix", "p"]}},
    },
}

_REQUIRED = {
    "simulate": ("system", "partition", "source", "target", "L", "horizon"),
    "pipeline": ("system", "partition", "source", "target", "L", "horizon"),
    "ergodic": ("system", "n"),
    "maxent": (),
    "entropy": (),
    "order": (),
}

OBSERVABLES = {
    "x": lambda s: s[:, 0],
    "x2": lambda s: s[:, 0] ** 2,
    "sin2pix": lambda s: np.sin(2.0 * np.pi * s[:, 0]),
    "p": lambda s: s[:, 1],
}


def load_config(path: str, command: str, seed_override: int | None) -> dict:
    cfg_path = FsPath(path)
    if not cfg_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cfg = json.loads(cfg_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if seed_override is not None:
        cfg["seed"] = seed_override
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None
    if cfg.get("command", command) != command:
        raise ConfigError(f"config is for command {cfg['command']!r}, not {command!r}")
    missing = [k for k in _REQUIRED[command] if k not in cfg]
    if missing:
        raise ConfigError(f"{command} config is missing: {', '.join(missing)}")
    if "input" in cfg:
        inp = FsPath(cfg["input"])
        if not inp.is_absolute():
            inp = cfg_path.parent / inp
        if not inp.is_file():
            raise ConfigError(f"input file not found: {cfg['input']}")
        try:
            payload = json.loads(inp.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"input is not valid JSON: {exc}") from None
        cfg = {**cfg, **payload}
        cfg.pop("input")
        try:
            jsonschema.validate(cfg, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"invalid input file: {exc.message}") from None
    cfg["command"] = command
    return cfg


def _system(cfg: dict) -> MapSystem:
    s = cfg["system"]
    try:
        return MapSystem(s["map"], dict(s.get("params", {})), Box.unit(), float(s.get("dt", 1.0)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _partition(cfg: dict) -> CellPartition:
    return CellPartition(Box.unit(), tuple(cfg["partition"]["resolution"]))


def _header(cfg: dict) -> dict:
    return {
        "command": cfg["command"],
        "config_hash": canonical_hash(cfg),
        "seed": cfg["seed"],
        "version": __version__,
    }


def _simulate(cfg: dict, full: bool) -> tuple[dict, dict]:
    system, partition = _system(cfg), _partition(cfg)
    for key in ("source", "target"):
        if cfg[key] >= partition.n_cells:
            raise ConfigError(f"{key} cell {cfg[key]} out of range for {partition.n_cells} cells")
    if cfg["source"] == cfg["target"]:
        raise ConfigError("source and target cells must differ")
    kB = float(cfg.get("kB", 1.0))
    ens = simulate_paths(system, partition, cfg["source"], cfg["target"], cfg["L"],
                         cfg["horizon"], cfg["seed"], workers=cfg.get("workers", 1))
    dist = estimate_distribution(ens)
    report = _header(cfg)
    report.update({
        "ensemble": ensemble_to_dict(ens),
        "distribution": distribution_to_dict(dist),
        "n_paths": dist.omega,
        "entropy_generation": entropy_generation_statistical(dist, kB),
        "kB": kB,
    })
    extras = {"paths.csv": paths_csv(ens)}
    if full:
        q = partition_identity_check(dist, kB)
        report.update({
            "greatest_path": sorted(greatest_path(dist)),
            "greatest_path_signatures": [list(dist.labels[k]) for k in sorted(greatest_path(dist))],
            "partition_identity": q,
            "partition_identity_error": q - math.e,
        })
    if full or cfg.get("svg", False):
        extras["path_probabilities.svg"] = probability_svg(dist.probabilities)
    return report, extras


def _maxent(cfg: dict) -> tuple[dict, dict]:
    if "actions" not in cfg or "target_mean" not in cfg:
        raise ConfigError("maxent needs 'actions' and 'target_mean'")
    sol = solve_maxent(cfg["actions"], cfg["target_mean"])
    report = _header(cfg)
    report.update({
        "actions": cfg["actions"],
        "target_mean": cfg["target_mean"],
        "eta": sol.eta,
        "Q": sol.Q,
        "log_Q": sol.log_Q,
        "probabilities": sol.probabilities,
        "mean_action": sol.mean_action,
        "iterations": sol.iterations,
        "identity_sum": sol.identity_sum,
    })
    rows = ["k,action,probability"] + [f"{k},{a!r},{p:.17g}" for k, (a, p)
                                         in enumerate(zip(cfg["actions"], sol.probabilities))]
    return report, {"maxent.csv": "\n".join(rows) + "\n"}


def _entropy(cfg: dict) -> tuple[dict, dict]:
    report = _header(cfg)
    kB = float(cfg.get("kB", 1.0))
    if "account" in cfg:
        acct = ThermoAccount.from_dict(cfg["account"])
        rep = entropy_report(acct)
        report["account"] = asdict(acct)
    elif "distribution" in cfg:
        rep = entropy_report(distribution_from_dict(cfg["distribution"]), kB)
        report["kB"] = kB
    else:
        raise ConfigError("entropy needs an 'account' or a 'distribution'")
    report.update({"value": rep.value, "form": rep.form, "inputs_hash": rep.inputs_hash})
    return report, {}


def _order(cfg: dict) -> tuple[dict, dict]:
    report = _header(cfg)
    extras = {}
    if "X" in cfg and "Y" in cfg:
        X = DiscreteRV.from_atoms(cfg["X"]["support"], cfg["X"]["probs"])
        Y = DiscreteRV.from_atoms(cfg["Y"]["support"], cfg["Y"]["probs"])
        verdict = usual_order(X, Y)
        report["verdict"] = verdict.value
        lower, upper, swapped = (Y, X, True) if verdict.value == "Y<=X" else (X, Y, False)
        try:
            coupling = build_coupling(lower, upper)
            report["coupling"] = {"swapped": swapped, "rows": coupling.to_rows()}
            lines = ["z_lo,z_hi,mass,psi1,psi2"] + [
                ",".join(format(r[k], ".17g") for k in ("z_lo", "z_hi", "mass", "psi1", "psi2"))
                for r in coupling.to_rows()]
            extras["coupling.csv"] = "\n".join(lines) + "\n"
        except NotOrderedError as exc:
            report["coupling"] = None
            report["witness"] = exc.witness
    elif "distribution" in cfg:
        dist = distribution_from_dict(cfg["distribution"])
        kB = float(cfg.get("kB", 1.0))
        pairs = cfg.get("pairs") or [[i, j] for i in range(dist.omega)
                                     for j in range(i + 1, dist.omega)]
        results = []
        for i, j in pairs:
            if i >= dist.omega or j >= dist.omega:
                raise ConfigError(f"pair ({i}, {j}) out of range for {dist.omega} paths")
            by_p = compare_paths(dist, i, j, kB)
            by_g = gradient_order(dist, i, j, kB)
            results.append({"i": i, "j": j, "relation": by_p.relation.value,
                            "gradient_relation": by_g.relation.value,
                            "p_i": by_p.p_i, "p_j": by_p.p_j, "g_i": by_p.g_i, "g_j": by_p.g_j})
        report["pairs"] = results
        report["greatest_path"] = sorted(greatest_path(dist))
    else:
        raise ConfigError("order needs 'X' and 'Y', or a 'distribution'")
    return report, extras


def _ergodic(cfg: dict) -> tuple[dict, dict]:
    system = _system(cfg)
    n = cfg["n"]
    samples = cfg.get("samples", n)
    traj = random_orbit(system, n, cfg["seed"])
    bound = 5.0 / math.sqrt(n)
    rows = []
    for name in cfg.get("observables", ["x", "x2", "sin2pix"]):
        f = OBSERVABLES[name]
        ta = time_average(traj, f, vectorized=True)
        sa = space_average(system, f, samples, cfg["seed"] + 1, vectorized=True)
        checkpoints = [time_average(type(traj)(traj.states[: m + 1], traj.dt), f, vectorized=True)
                       for m in (n // 4, n // 2, 3 * n // 4, n)]
        rows.append({"observable": name, "time_average": ta, "space_average": sa,
                     "difference": abs(ta - sa), "bound": bound, "within_bound": abs(ta - sa) <= bound,
                     "steady_state": steady_state_check(checkpoints[1:], sa, 2 * bound)})
    report = _header(cfg)
    report.update({"n": n, "samples": samples, "system": system.to_dict(), "observables": rows})
    return report, {}


def run(cfg: dict) -> tuple[dict, dict]:
    command = cfg["command"]
    if command == "simulate":
        return _simulate(cfg, full=False)
    if command == "pipeline":
        return _simulate(cfg, full=True)
    if command == "maxent":
        return _maxent(cfg)
    if command == "entropy":
        return _entropy(cfg)
    if command == "order":
        return _order(cfg)
    if command == "ergodic":
        return _ergodic(cfg)
    raise ConfigError(f"unknown command {command!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathorder", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--out", help="directory for report.json and tables")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="what to print on stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, args.command, args.seed)
        report, extras = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    text = dumps(report)
    if args.out:
        out = FsPath(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
        for name, body in extras.items():
            (out / name).write_text(body)
    tables = [body for name, body in extras.items() if name.endswith(".csv")]
    try:
        sys.stdout.write(tables[0] if args.format == "csv" and tables else text)
        sys.stdout.flush()
    except BrokenPipeError:  # e.g. piped into `head`
        sys.stdout = None
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
