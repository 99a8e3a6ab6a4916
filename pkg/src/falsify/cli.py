"""Command line front end: batch experiment runs, matrix sweeps, theory
checks, and the built-in spec listing.

Exit code 0 on completion, 2 on any configuration problem (bad file, bad
key, unknown name); messages name the offending key path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .experiments import (
    BUILTIN_SPECS,
    ConfigError,
    ExperimentConfig,
    run_experiment,
    run_matrix,
)
from .stl import parse as parse_formula
from .theory import (
    THEORY_MODELS,
    QuantizedInputGrid,
    check_incremental_falsification,
    check_statelessness,
    check_time_monotonicity,
    check_truncated_time_monotonicity,
    piecewise_triple_sampler,
    uniform_triple_sampler,
)

_SECTIONS = ("model", "spec", "run", "budget", "staging", "optimizer")


def _load_toml(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{path}: no such config file")
    try:
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _seed_override(cfg: ExperimentConfig) -> ExperimentConfig:
    raw = os.environ.get("FALSIFY_SEED")
    if raw is None:
        return cfg
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"FALSIFY_SEED: expected an integer, got {raw!r}") from None
    from dataclasses import replace

    return replace(cfg, seed=seed)


def _cmd_run(args) -> int:
    cfg = _seed_override(ExperimentConfig.from_dict(_load_toml(args.config)))
    run_experiment(cfg, echo=print)
    print(f"artifacts written to {cfg.out_dir}")
    return 0


def _cmd_matrix(args) -> int:
    data = _load_toml(args.config)
    entries = data.pop("experiment", None)
    if not isinstance(entries, list) or not all(isinstance(e, dict) for e in entries or []):
        if entries is None:
            raise ConfigError("experiment: matrix file needs [[experiment]] entries")
        raise ConfigError("experiment: expected an array of tables")
    base_run = data.get("run", {})
    out_dir = base_run.get("out_dir", "results")
    configs = []
    for i, entry in enumerate(entries):
        merged = {}
        for section in set(data) | set(entry):
            if section not in _SECTIONS:
                raise ConfigError(f"experiment[{i}].{section}: unknown section")
            merged[section] = {**data.get(section, {}), **entry.get(section, {})}
        configs.append(_seed_override(ExperimentConfig.from_dict(merged)))
    run_matrix(configs, out_dir, echo=print)
    print(f"matrix written to {Path(out_dir) / 'matrix.csv'}")
    return 0


def _theory_get(table: dict, key: str, default=None, required: bool = False):
    if key not in table:
        if required:
            raise ConfigError(f"theory.{key}: required")
        return default
    return table[key]


def _cmd_theory_check(args) -> int:
    data = _load_toml(args.config)
    table = data.get("theory")
    if not isinstance(table, dict):
        raise ConfigError("theory: config file needs a [theory] table")

    model_name = _theory_get(table, "model", required=True)
    if model_name not in THEORY_MODELS:
        valid = ", ".join(sorted(THEORY_MODELS))
        raise ConfigError(f"theory.model: unknown model {model_name!r}; valid: {valid}")
    dt = float(_theory_get(table, "dt", 0.05))
    params = _theory_get(table, "params", {})
    if not isinstance(params, dict):
        raise ConfigError("theory.params: expected a table")
    model = THEORY_MODELS[model_name](dt=dt, **params)

    spec_text = _theory_get(table, "spec")
    phi = parse_formula(spec_text, model.output_names) if spec_text else None

    checks = _theory_get(table, "checks", ["monotone", "truncated", "stateless"])
    known = ("incremental", "monotone", "truncated", "stateless")
    for c in checks:
        if c not in known:
            raise ConfigError(f"theory.checks: unknown check {c!r}; valid: {', '.join(known)}")
    if phi is None and set(checks) & {"incremental", "monotone", "truncated"}:
        raise ConfigError("theory.spec: required for formula-based checks")

    seed = int(os.environ.get("FALSIFY_SEED", _theory_get(table, "seed", 0)))
    t1 = float(_theory_get(table, "t1", 2.0))
    t2 = float(_theory_get(table, "t2", 2.0))
    n_triples = int(_theory_get(table, "n_triples", 200))
    declared = _theory_get(table, "declared_monotone")
    rng = np.random.default_rng(seed)
    if _theory_get(table, "sampler", "uniform") == "piecewise":
        sampler = piecewise_triple_sampler(model, t1, t2, float(_theory_get(table, "seg", 0.5)), rng)
    else:
        sampler = uniform_triple_sampler(model, t1, t2, rng)

    reports = []
    for check in checks:
        if check == "incremental":
            points = _theory_get(table, "grid_points", required=True)
            grid = QuantizedInputGrid(
                tuple(tuple(float(v) for v in np.atleast_1d(p)) for p in points),
                int(_theory_get(table, "grid_k", 2)),
                float(_theory_get(table, "grid_seg", t1)),
            )
            reports.append(check_incremental_falsification(model, phi, grid).as_dict())
        elif check == "monotone":
            reports.append(check_time_monotonicity(model, phi, sampler, n_triples).as_dict())
        elif check == "truncated":
            reports.append(
                check_truncated_time_monotonicity(
                    model, phi, sampler, n_triples, declared_monotone=declared
                ).as_dict()
            )
        else:
            reports.append(check_statelessness(model, sampler, n_triples).as_dict())

    payload = json.dumps(
        {"model": model_name, "spec": spec_text, "seed": seed, "reports": reports},
        indent=2,
        sort_keys=True,
    )
    out = _theory_get(table, "out")
    if out:
        Path(out).write_text(payload + "\n")
        print(f"report written to {out}")
    else:
        print(payload)
    return 0


def _cmd_spec(args) -> int:
    if args.list or not args.name:
        for name in sorted(BUILTIN_SPECS):
            info = BUILTIN_SPECS[name]
            print(f"{name:20s} {info.model:18s} T={info.horizon:g} K={info.k}  {info.text}")
        return 0
    if args.name not in BUILTIN_SPECS:
        raise ConfigError(
            f"spec: unknown name {args.name!r}; valid: {', '.join(sorted(BUILTIN_SPECS))}"
        )
    print(BUILTIN_SPECS[args.name].text)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="falsify", description="Black-box temporal-logic falsification testbench"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config", help="TOML config file")
    p_run.set_defaults(fn=_cmd_run)

    p_matrix = sub.add_parser("matrix", help="run a matrix of experiment configs")
    p_matrix.add_argument("config", help="TOML file with [[experiment]] entries")
    p_matrix.set_defaults(fn=_cmd_matrix)

    p_theory = sub.add_parser("theory-check", help="run theory checks from a config")
    p_theory.add_argument("config", help="TOML file with a [theory] table")
    p_theory.set_defaults(fn=_cmd_theory_check)

    p_spec = sub.add_parser("spec", help="show built-in specifications")
    p_spec.add_argument("name", nargs="?", help="spec name to print")
    p_spec.add_argument("--list", action="store_true", help="list all built-in specs")
    p_spec.set_defaults(fn=_cmd_spec)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
