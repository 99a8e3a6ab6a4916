"""Configuration-driven experiment harness.

Runs seeded batches of falsification trials, aggregates them into summary
rows, and writes artifacts: per-trial JSON records, CSV summaries, and an
SVG of the best falsifying trajectory.  Everything written to records and
CSVs is a pure function of the config and master seed; wall-clock times
go to the console and a timings sidecar only, so reruns reproduce the
deterministic artifacts byte for byte.
"""

from __future__ import annotations

import concurrent.futures
import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .models import BUILTIN_MODELS, builtin
from .signals import Signal
from .solver import StopPolicy, falsify, score_from_formula
from .staging import StagingConfig, staged_falsify
from .stl import Atom, Formula, parse
from .optim import OPTIMIZERS

ALGORITHMS = ("plain", "ts", "ats")


@dataclass(frozen=True)
class SpecInfo:
    name: str
    text: str
    model: str
    horizon: float
    k: int


def _fuel_spec(t1: float, t2: float, hold: float, delta: float) -> str:
    return f"not (F[{t1:g},{t2:g}] (G[0,{hold:g}] (AF - 14.7 > {delta * 14.7!r})))"


BUILTIN_SPECS = {
    s.name: s
    for s in (
        SpecInfo("S1", "G[0,30] (v < 120)", "auto_transmission", 30.0, 5),
        SpecInfo(
            "S2",
            "G[0,30] ((g > 2.5 and not (g > 3.5)) -> (v >= 30))",
            "auto_transmission",
            30.0,
            5,
        ),
        SpecInfo("S3_easy", "F[10,30] (v <= 50 or v >= 60)", "auto_transmission", 30.0, 5),
        SpecInfo("S3_hard", "F[10,30] (v <= 53 or v >= 57)", "auto_transmission", 30.0, 5),
        SpecInfo(
            "S4_easy",
            "G[0,10] (v < 80) or F[0,30] (omega > 4500)",
            "auto_transmission",
            30.0,
            5,
        ),
        SpecInfo(
            "S4_mid",
            "G[0,10] (v < 50) or F[0,30] (omega > 2700)",
            "auto_transmission",
            30.0,
            5,
        ),
        SpecInfo(
            "S4_hard",
            "G[0,10] (v < 50) or F[0,30] (omega > 2520)",
            "auto_transmission",
            30.0,
            5,
        ),
        SpecInfo("S_init", _fuel_spec(0, 6, 3, 0.07), "fuel_control", 9.0, 3),
        SpecInfo("S_stable", _fuel_spec(6, 26, 4, 0.01), "fuel_control", 30.0, 5),
        SpecInfo("powertrain_ceiling", "G[0,30] (v < 120)", "powertrain", 30.0, 5),
        SpecInfo("stateless_reach", "F (y <= 4.5 or y >= 5.5)", "stateless_map", 10.0, 5),
    )
}


def builtin_spec(name: str) -> str:
    """Formula text of a named built-in specification."""
    try:
        return BUILTIN_SPECS[name].text
    except KeyError:
        valid = ", ".join(sorted(BUILTIN_SPECS))
        raise ValueError(f"unknown spec {name!r}; valid names: {valid}") from None


class ConfigError(ValueError):
    """Invalid experiment configuration; message starts with the key path."""


def _take(table: dict, section: str, allowed: tuple) -> dict:
    for key in table:
        if key not in allowed:
            raise ConfigError(f"{section}.{key}: unknown key")
    return table


def _get(table: dict, section: str, key: str, kind, default):
    if key not in table:
        return default
    value = table[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ConfigError(f"{section}.{key}: expected {kind.__name__}, got {value!r}")
    return value


@dataclass
class ExperimentConfig:
    """One row of the experiment matrix, fully resolved."""

    model_name: str
    spec_text: str
    horizon: float
    k: int
    dt: float = 0.05
    spec_name: str | None = None
    model_params: dict = field(default_factory=dict)
    algorithm: str = "plain"
    optimizer: str = "gnm"
    optimizer_params: dict = field(default_factory=dict)
    n_init: int = 20
    n_opt: int = 130
    n_stuck: int | None = None
    stages: int = 1
    derivative_path: str = "semantic"
    continuation_path: str = "resimulate"
    n_trials: int = 20
    seed: int = 0
    out_dir: str = "results"
    workers: int = 1
    plot: bool = True

    def __post_init__(self):
        if self.model_name not in BUILTIN_MODELS:
            raise ConfigError(f"model.name: unknown model {self.model_name!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"run.algorithm: must be one of {ALGORITHMS}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"run.optimizer: must be one of {tuple(OPTIMIZERS)}")
        if self.k < 1:
            raise ConfigError("run.k: must be >= 1")
        if self.n_trials < 1:
            raise ConfigError("run.n_trials: must be >= 1")
        if self.dt <= 0:
            raise ConfigError("run.dt: must be positive")
        if self.horizon <= 0:
            raise ConfigError("run.horizon: must be positive")
        if self.workers < 1:
            raise ConfigError("run.workers: must be >= 1")
        if self.n_init < 0 or self.n_opt < 0 or self.n_init + self.n_opt < 1:
            raise ConfigError("budget: need n_init >= 0, n_opt >= 0, total >= 1")
        if self.algorithm != "plain":
            if self.stages < 1 or self.k % self.stages != 0:
                raise ConfigError("staging.stages: must divide run.k")

    @property
    def spec_label(self) -> str:
        return self.spec_name or self.spec_text

    @property
    def config_id(self) -> str:
        return f"{self.model_name}__{self.spec_label}__{self.algorithm}__{self.optimizer}"

    def as_dict(self) -> dict:
        """Sections mirror from_dict; execution details (out_dir, workers,
        plot) stay out so the dict identifies the experiment, not the run."""
        spec = {"name": self.spec_name} if self.spec_name else {"text": self.spec_text}
        staging = {
            "stages": self.stages,
            "derivative_path": self.derivative_path,
            "continuation_path": self.continuation_path,
        }
        if self.n_stuck is not None:
            staging["n_stuck"] = self.n_stuck
        data = {
            "model": {"name": self.model_name, "params": dict(self.model_params)},
            "spec": spec,
            "run": {
                "horizon": self.horizon,
                "dt": self.dt,
                "k": self.k,
                "algorithm": self.algorithm,
                "optimizer": self.optimizer,
                "n_trials": self.n_trials,
                "seed": self.seed,
            },
            "budget": {"n_init": self.n_init, "n_opt": self.n_opt},
            "staging": staging,
        }
        if self.optimizer_params:
            data["optimizer"] = {"params": dict(self.optimizer_params)}
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        for section in data:
            if section not in ("model", "spec", "run", "budget", "staging", "optimizer"):
                raise ConfigError(f"{section}: unknown section")
        model_t = _take(data.get("model", {}), "model", ("name", "params"))
        spec_t = _take(data.get("spec", {}), "spec", ("name", "text"))
        run_t = _take(
            data.get("run", {}),
            "run",
            (
                "horizon",
                "dt",
                "k",
                "algorithm",
                "optimizer",
                "n_trials",
                "seed",
                "out_dir",
                "workers",
                "plot",
            ),
        )
        budget_t = _take(data.get("budget", {}), "budget", ("n_init", "n_opt"))
        staging_t = _take(
            data.get("staging", {}),
            "staging",
            ("stages", "n_stuck", "derivative_path", "continuation_path"),
        )
        opt_t = _take(data.get("optimizer", {}), "optimizer", ("params",))

        spec_name = _get(spec_t, "spec", "name", str, None)
        spec_text = _get(spec_t, "spec", "text", str, None)
        if (spec_name is None) == (spec_text is None):
            raise ConfigError("spec: give exactly one of spec.name or spec.text")
        info = None
        if spec_name is not None:
            if spec_name not in BUILTIN_SPECS:
                valid = ", ".join(sorted(BUILTIN_SPECS))
                raise ConfigError(f"spec.name: unknown spec {spec_name!r}; valid names: {valid}")
            info = BUILTIN_SPECS[spec_name]
            spec_text = info.text

        model_name = _get(model_t, "model", "name", str, info.model if info else None)
        if model_name is None:
            raise ConfigError("model.name: required when spec.text is used")
        horizon = _get(run_t, "run", "horizon", float, info.horizon if info else None)
        if horizon is None:
            raise ConfigError("run.horizon: required when spec.text is used")
        k = _get(run_t, "run", "k", int, info.k if info else 5)

        algorithm = _get(run_t, "run", "algorithm", str, "plain")
        staged = algorithm in ("ts", "ats")
        n_init = _get(budget_t, "budget", "n_init", int, 4 if staged else 20)
        n_opt = _get(budget_t, "budget", "n_opt", int, 26 if staged else 130)
        n_stuck = _get(staging_t, "staging", "n_stuck", int, 15) if algorithm == "ats" else None
        stages = _get(staging_t, "staging", "stages", int, k if staged else 1)

        params = model_t.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("model.params: expected a table")
        opt_params = opt_t.get("params", {})
        if not isinstance(opt_params, dict):
            raise ConfigError("optimizer.params: expected a table")

        return cls(
            model_name=model_name,
            spec_text=spec_text,
            horizon=horizon,
            k=k,
            dt=_get(run_t, "run", "dt", float, 0.05),
            spec_name=spec_name,
            model_params=dict(params),
            algorithm=algorithm,
            optimizer=_get(run_t, "run", "optimizer", str, "gnm"),
            optimizer_params=dict(opt_params),
            n_init=n_init,
            n_opt=n_opt,
            n_stuck=n_stuck,
            stages=stages,
            derivative_path=_get(staging_t, "staging", "derivative_path", str, "semantic"),
            continuation_path=_get(staging_t, "staging", "continuation_path", str, "resimulate"),
            n_trials=_get(run_t, "run", "n_trials", int, 20),
            seed=_get(run_t, "run", "seed", int, 0),
            out_dir=_get(run_t, "run", "out_dir", str, "results"),
            workers=_get(run_t, "run", "workers", int, 1),
            plot=_get(run_t, "run", "plot", bool, True),
        )


@dataclass
class SummaryRow:
    config_id: str
    model: str
    spec: str
    algorithm: str
    optimizer: str
    successes: int
    n_trials: int
    mean_wall: float
    mean_sims: float
    mean_robustness: float
    mean_sims_to_success: float

    @property
    def success_str(self) -> str:
        return f"{self.successes}/{self.n_trials}"


def build_model(cfg: ExperimentConfig):
    return builtin(cfg.model_name, dt=cfg.dt, **cfg.model_params)


def build_formula(cfg: ExperimentConfig) -> Formula:
    model = build_model(cfg)
    return parse(cfg.spec_text, model.output_names)


def _run_trial(job):
    """One seeded trial; top level so a worker pool can pickle it."""
    cfg, index, seed_seq = job
    model = build_model(cfg)
    phi = parse(cfg.spec_text, model.output_names)
    rng = np.random.default_rng(seed_seq)
    if cfg.algorithm == "plain":
        rec = falsify(
            model,
            score_from_formula(phi),
            cfg.horizon,
            cfg.k,
            StopPolicy(cfg.n_init, cfg.n_opt, cfg.n_stuck),
            cfg.optimizer,
            rng,
            seed=index,
            optimizer_params=cfg.optimizer_params,
        )
        row = {
            "trial": index,
            "success": rec.success,
            "sims": rec.evals,
            "robustness": rec.best_score,
            "best_point": [float(v) for v in np.asarray(rec.points[rec.best_index]).ravel()],
        }
        return row, rec.best_input, rec.best_output, rec.wall_time
    scfg = StagingConfig(
        k_stages=cfg.stages,
        stop=StopPolicy(cfg.n_init, cfg.n_opt, cfg.n_stuck),
        control_points_per_stage=cfg.k // cfg.stages,
        derivative_path=cfg.derivative_path,
        continuation_path=cfg.continuation_path,
    )
    rec = staged_falsify(
        model,
        phi,
        cfg.horizon,
        scfg,
        cfg.optimizer,
        rng,
        seed=index,
        optimizer_params=cfg.optimizer_params,
    )
    best_point = [
        float(v)
        for sr in rec.stage_records
        for v in np.asarray(sr.points[sr.best_index]).ravel()
    ]
    row = {
        "trial": index,
        "success": rec.success,
        "sims": rec.evals,
        "robustness": rec.final_score,
        "best_point": best_point,
        "stage_sims": [sr.evals for sr in rec.stage_records],
        "early_exit_stage": rec.early_exit_stage,
    }
    return row, rec.input, rec.output, rec.wall_time


def run_experiment(cfg: ExperimentConfig, echo=None):
    """Run every trial of one config and write its artifacts.

    Returns (SummaryRow, trial rows).  records.json, summary.csv, and the
    SVG depend only on the config and master seed; wall-clock times are
    echoed and written to timings.txt, never into those files.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trials)
    jobs = [(cfg, i, children[i]) for i in range(cfg.n_trials)]
    if cfg.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_trial, jobs))
    else:
        results = [_run_trial(job) for job in jobs]

    rows = [r[0] for r in results]
    walls = [r[3] for r in results]
    successes = sum(1 for r in rows if r["success"])
    sims = [r["sims"] for r in rows]
    success_sims = [r["sims"] for r in rows if r["success"]]
    summary = SummaryRow(
        config_id=cfg.config_id,
        model=cfg.model_name,
        spec=cfg.spec_label,
        algorithm=cfg.algorithm,
        optimizer=cfg.optimizer,
        successes=successes,
        n_trials=cfg.n_trials,
        mean_wall=float(np.mean(walls)),
        mean_sims=float(np.mean(sims)),
        mean_robustness=float(np.mean([r["robustness"] for r in rows])),
        mean_sims_to_success=float(np.mean(success_sims)) if success_sims else float("inf"),
    )

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.json").write_text(
        json.dumps({"config": cfg.as_dict(), "trials": rows}, indent=2, sort_keys=True)
    )
    _write_summary_csv(out / "summary.csv", [summary])
    (out / "timings.txt").write_text(
        "".join(f"trial {i}: {w:.3f} s\n" for i, w in enumerate(walls))
        + f"total: {sum(walls):.3f} s\n"
    )
    if cfg.plot and successes:
        best = min(
            (i for i, r in enumerate(rows) if r["success"]), key=lambda i: rows[i]["robustness"]
        )
        model = build_model(cfg)
        write_trajectory_svg(
            out / "best_trajectory.svg",
            results[best][1],
            results[best][2],
            model,
            parse(cfg.spec_text, model.output_names),
            title=cfg.config_id,
        )
    if echo:
        echo(
            f"{cfg.config_id}: {summary.success_str} falsified, "
            f"mean {summary.mean_sims:.1f} sims/trial, "
            f"mean robustness {summary.mean_robustness:.4g}, "
            f"mean wall {summary.mean_wall:.3f} s"
        )
    return summary, rows


_SUMMARY_COLUMNS = (
    "config_id",
    "model",
    "spec",
    "algorithm",
    "optimizer",
    "successes",
    "mean_sims",
    "mean_robustness",
    "mean_sims_to_success",
)


def _write_summary_csv(path, summaries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SUMMARY_COLUMNS)
        for s in summaries:
            w.writerow(
                [
                    s.config_id,
                    s.model,
                    s.spec,
                    s.algorithm,
                    s.optimizer,
                    s.success_str,
                    repr(s.mean_sims),
                    repr(s.mean_robustness),
                    repr(s.mean_sims_to_success),
                ]
            )


def run_matrix(configs, out_dir, echo=None):
    """Run each config in order; per-config artifacts go to subdirectories
    and the combined table to matrix.csv.

    The matrix keeps the wall-time column of the familiar table layout, but
    its cells stay empty so the file is identical across reruns; measured
    times are echoed and live in each config's timings.txt.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summaries = []
    for i, cfg in enumerate(configs):
        sub = replace(cfg, out_dir=str(out / f"{i:02d}_{cfg.config_id}"))
        summary, _ = run_experiment(sub, echo=echo)
        summaries.append(summary)
    with open(out / "matrix.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "spec", "algorithm", "optimizer", "time", "successes"])
        for s in summaries:
            w.writerow([s.model, s.spec, s.algorithm, s.optimizer, "", s.success_str])
    _write_summary_csv(out / "summary.csv", summaries)
    return summaries


def _formula_atoms(phi: Formula):
    if isinstance(phi, Atom):
        yield phi
    for name in ("child", "left", "right"):
        sub = getattr(phi, name, None)
        if sub is not None:
            yield from _formula_atoms(sub)


def _thresholds(phi: Formula, n_channels: int):
    """Horizontal guide lines per output channel, read off single-channel atoms."""
    levels = [[] for _ in range(n_channels)]
    for atom in _formula_atoms(phi):
        if len(atom.terms) != 1:
            continue
        coef, ch = atom.terms[0]
        if coef == 0.0 or ch >= n_channels:
            continue
        level = -atom.const / coef
        if np.isfinite(level) and level not in levels[ch]:
            levels[ch].append(level)
    return levels


def write_trajectory_svg(path, w: Signal, y: Signal, model, phi: Formula, title="") -> None:
    """Stacked per-channel panels: inputs, then outputs with spec thresholds."""
    panels = [(f"in: {name}", w.channel(i), []) for i, name in enumerate(model.input_names)]
    levels = _thresholds(phi, y.dim)
    panels += [
        (f"out: {name}", y.channel(i), levels[i]) for i, name in enumerate(model.output_names)
    ]
    width, ph, margin = 800.0, 110.0, 45.0
    height = margin + len(panels) * (ph + 20.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}" font-family="monospace" font-size="11">',
        f'<text x="10" y="18">{title}</text>',
    ]
    times = w.times()
    t_hi = times[-1] if times[-1] > 0 else 1.0
    for p, (label, values, marks) in enumerate(panels):
        top = margin + p * (ph + 20.0)
        lo = float(min(values.min(), min(marks, default=values.min())))
        hi = float(max(values.max(), max(marks, default=values.max())))
        if hi - lo < 1e-12:
            lo, hi = lo - 1.0, hi + 1.0
        pad = 0.05 * (hi - lo)
        lo, hi = lo - pad, hi + pad

        def sx(t):
            return 60.0 + (width - 80.0) * t / t_hi

        def sy(v):
            return top + ph - ph * (v - lo) / (hi - lo)

        pts = " ".join(f"{sx(t):.2f},{sy(v):.2f}" for t, v in zip(times, values))
        parts.append(
            f'<rect x="60" y="{top:.2f}" width="{width - 80.0:.0f}" height="{ph:.0f}" '
            'fill="none" stroke="#999"/>'
        )
        parts.append(f'<text x="10" y="{top + 14.0:.2f}">{label}</text>')
        parts.append(f'<text x="10" y="{top + 30.0:.2f}">[{lo:.3g},{hi:.3g}]</text>')
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.2"/>')
        for level in marks:
            yy = sy(level)
            parts.append(
                f'<line x1="60" y1="{yy:.2f}" x2="{width - 20.0:.0f}" y2="{yy:.2f}" '
                'stroke="#d62728" stroke-dasharray="4 3"/>'
            )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
