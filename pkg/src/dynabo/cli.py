"""Experiment runner: config loading, batch runs, trace/summary emission.

Verbs:
    run <config>            execute every (mode, repetition) pair, write
                            trace CSVs plus a summary CSV
    validate <config>       check a config and print its normalized form
    plot-data <trace...>    emit plot-ready long tables from trace files
    mpb-preview <scenario>  print the moving-peaks change schedule

All outputs are plain CSV/JSON with repr-formatted floats, so identical
configs produce bitwise-identical files.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dynabo import __version__
from dynabo.acquisition import ExpectedImprovement, LowerConfidenceBound, PosteriorMean
from dynabo.engine import (
    DetectorConfig,
    EngineConfig,
    Mode,
    RunTrace,
    WarmupConfig,
    run,
)
from dynabo.gp import TrainConfig
from dynabo.kernels import KernelForm, KernelSpec
from dynabo.metrics import ScoredSeries, best_so_far, summarize, windowed_best
from dynabo.optimizer import PsoConfig
from dynabo.problems import (
    Problem,
    ingest_sensor_csv,
    make_mpb_scenario,
    make_sensor_problem,
    make_standard,
    mpb_init,
    mpb_step,
    scenario_presets,
)

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "normalize_config", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_ALL_ABORTED = 4

SCHEMA_VERSION = 1

TRACE_PREFIX = "trace"
SUMMARY_NAME = "summary.csv"


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending fields."""


# ---------------------------------------------------------------------------
# configuration schema
#
# One flat key space plus two structured fields: the problem selector and
# per-mode overrides.  Engine-level keys may be overridden per mode; null
# means "derive from the problem horizon" where noted.

_ENGINE_DEFAULTS = {
    "budget": 50,
    "warmup_lhd": 2,
    "warmup_bo_steps": 0,
    "warmup_span": None,  # null: warmup_lhd * fixed_interval
    "fixed_interval": None,  # null: horizon span / (total evaluations + 1)
    "min_lookahead": None,  # null: a tenth of fixed_interval
    "lookahead_fraction": 1.0,
    "acquisition": "lcb",
    "kappa": 2.0,
    "detector_window": 3,
    "detector_rate": 0.1,
    "flexible_heuristics": False,
    "kernel_spatial": "se",
    "kernel_temporal": "se",
    "tie_lengthscales": "none",
    "train_restarts": 5,
    "train_max_iters": 200,
    "freeze_after_warmup": False,
    "pso_particles": 50,
    "pso_iterations": 120,
}

_TOP_DEFAULTS = {
    "repetitions": 10,
    "base_seed": 0,
    "output_dir": "runs",
    "emit_traces": True,
    "emit_summary": True,
    "emit_plot_data": False,
    "metric_window": 5,
    "mode_overrides": {},
}

_PROBLEM_KEYS = {
    "standard": {"name": None, "time_dim": None, "seed": 0},
    "mpb": {"scenario": None, "seed": 0},
    "sensor": {"readings": None, "coords": None, "first_n_epochs": 3000},
}

_ACQUISITIONS = ("lcb", "ei", "posterior_mean")
_KERNEL_FORMS = tuple(f.value for f in KernelForm)
_MODES = tuple(m.value for m in Mode)


def _check_engine_values(prefix: str, values: dict, errors: list):
    def bad(key, msg):
        errors.append(f"{prefix}{key}: {msg}")

    pos = ("kappa", "detector_rate")
    opt_pos = ("warmup_span", "fixed_interval", "min_lookahead")
    counts = ("budget", "detector_window", "train_restarts", "train_max_iters",
              "pso_particles", "pso_iterations")
    for key in pos:
        if key in values and not (isinstance(values[key], (int, float)) and values[key] > 0):
            bad(key, "must be a positive number")
    for key in opt_pos:
        v = values.get(key)
        if v is not None and not (isinstance(v, (int, float)) and v > 0):
            bad(key, "must be null or a positive number")
    for key in counts:
        if key in values and not (isinstance(values[key], int) and values[key] >= 1):
            bad(key, "must be a positive integer")
    if "warmup_lhd" in values and not (
        isinstance(values["warmup_lhd"], int) and values["warmup_lhd"] >= 1
    ):
        bad("warmup_lhd", "must be a positive integer")
    if "warmup_bo_steps" in values and not (
        isinstance(values["warmup_bo_steps"], int) and values["warmup_bo_steps"] >= 0
    ):
        bad("warmup_bo_steps", "must be a nonnegative integer")
    if "lookahead_fraction" in values:
        v = values["lookahead_fraction"]
        if not (isinstance(v, (int, float)) and 0.0 < v <= 1.0):
            bad("lookahead_fraction", "must lie in (0, 1]")
    if "acquisition" in values and values["acquisition"] not in _ACQUISITIONS:
        bad("acquisition", f"must be one of {_ACQUISITIONS}")
    for key in ("kernel_spatial", "kernel_temporal"):
        if key in values and values[key] not in _KERNEL_FORMS:
            bad(key, f"must be one of {_KERNEL_FORMS}")
    if "tie_lengthscales" in values and values["tie_lengthscales"] not in (
        "none", "spatial", "all",
    ):
        bad("tie_lengthscales", "must be none, spatial, or all")
    for key in ("flexible_heuristics", "freeze_after_warmup"):
        if key in values and not isinstance(values[key], bool):
            bad(key, "must be a boolean")


def normalize_config(raw: dict) -> dict:
    """Validate a raw config mapping and fill every default.

    Unknown keys are rejected; error messages name each offending field.
    The result is canonical: loading it again is the identity.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    errors: list[str] = []
    known = {"schema", "problem", "modes"} | set(_TOP_DEFAULTS) | set(_ENGINE_DEFAULTS)
    for key in sorted(set(raw) - known):
        errors.append(f"{key}: unknown key")

    if raw.get("schema") != SCHEMA_VERSION:
        errors.append(f"schema: must be {SCHEMA_VERSION}")

    problem = raw.get("problem")
    norm_problem = {}
    if not isinstance(problem, dict) or "kind" not in problem:
        errors.append("problem: must be a mapping with a 'kind'")
    elif problem["kind"] not in _PROBLEM_KEYS:
        errors.append(f"problem.kind: must be one of {tuple(_PROBLEM_KEYS)}")
    else:
        kind = problem["kind"]
        allowed = _PROBLEM_KEYS[kind]
        for key in sorted(set(problem) - set(allowed) - {"kind"}):
            errors.append(f"problem.{key}: unknown key")
        norm_problem["kind"] = kind
        for key, default in allowed.items():
            value = problem.get(key, default)
            if value is None and default is None and key in ("name", "scenario", "readings", "coords"):
                errors.append(f"problem.{key}: required")
            norm_problem[key] = value

    modes = raw.get("modes")
    if not (isinstance(modes, list) and modes):
        errors.append("modes: must be a nonempty list")
        modes = []
    for m in modes:
        if m not in _MODES:
            errors.append(f"modes: {m!r} is not one of {_MODES}")

    reps = raw.get("repetitions", _TOP_DEFAULTS["repetitions"])
    if not (isinstance(reps, int) and reps >= 1):
        errors.append("repetitions: must be a positive integer")
    seed = raw.get("base_seed", _TOP_DEFAULTS["base_seed"])
    if not (isinstance(seed, int) and seed >= 0):
        errors.append("base_seed: must be a nonnegative integer")
    mw = raw.get("metric_window", _TOP_DEFAULTS["metric_window"])
    if not (isinstance(mw, int) and mw >= 1):
        errors.append("metric_window: must be a positive integer")
    for key in ("emit_traces", "emit_summary", "emit_plot_data"):
        if key in raw and not isinstance(raw[key], bool):
            errors.append(f"{key}: must be a boolean")
    if "output_dir" in raw and not isinstance(raw["output_dir"], str):
        errors.append("output_dir: must be a string")

    base_engine = {k: raw.get(k, v) for k, v in _ENGINE_DEFAULTS.items()}
    _check_engine_values("", base_engine, errors)

    overrides = raw.get("mode_overrides", {})
    norm_overrides: dict = {}
    if not isinstance(overrides, dict):
        errors.append("mode_overrides: must be a mapping of mode to overrides")
    else:
        for mode, sub in sorted(overrides.items()):
            if mode not in _MODES:
                errors.append(f"mode_overrides.{mode}: not a known mode")
                continue
            if not isinstance(sub, dict):
                errors.append(f"mode_overrides.{mode}: must be a mapping")
                continue
            for key in sorted(set(sub) - set(_ENGINE_DEFAULTS)):
                errors.append(f"mode_overrides.{mode}.{key}: unknown key")
            sub = {k: v for k, v in sub.items() if k in _ENGINE_DEFAULTS}
            _check_engine_values(f"mode_overrides.{mode}.", sub, errors)
            if sub:
                norm_overrides[mode] = dict(sorted(sub.items()))

    if errors:
        raise ConfigError("invalid config: " + "; ".join(errors))

    out = {"schema": SCHEMA_VERSION, "problem": norm_problem, "modes": list(modes)}
    for key, default in _TOP_DEFAULTS.items():
        if key == "mode_overrides":
            out[key] = norm_overrides
        else:
            out[key] = raw.get(key, default)
    out.update(base_engine)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Normalized experiment description; ``data`` is the canonical mapping."""

    data: dict

    @property
    def modes(self) -> list[str]:
        return self.data["modes"]

    @property
    def repetitions(self) -> int:
        return self.data["repetitions"]

    @property
    def base_seed(self) -> int:
        return self.data["base_seed"]

    @property
    def metric_window(self) -> int:
        return self.data["metric_window"]

    @property
    def output_dir(self) -> Path:
        return Path(self.data["output_dir"])

    def engine_params(self, mode: str) -> dict:
        params = {k: self.data[k] for k in _ENGINE_DEFAULTS}
        params.update(self.data["mode_overrides"].get(mode, {}))
        return params

    def canonical_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(
            json.dumps(self.data, sort_keys=True, separators=(",", ":")).encode()
        ).hexdigest()


def load_config(source) -> ExperimentConfig:
    """Parse and validate a config from a path or a mapping."""
    if isinstance(source, dict):
        return ExperimentConfig(normalize_config(source))
    text = Path(source).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(
            f"config parse error at line {err.lineno} column {err.colno}: {err.msg}"
        ) from err
    return ExperimentConfig(normalize_config(raw))


def build_problem(config: ExperimentConfig) -> Problem:
    p = config.data["problem"]
    if p["kind"] == "standard":
        return make_standard(p["name"], time_dim=p["time_dim"], seed=p["seed"])
    if p["kind"] == "mpb":
        return make_mpb_scenario(p["scenario"], seed=p["seed"])
    table = ingest_sensor_csv(p["readings"], p["coords"])
    return make_sensor_problem(table, first_n_epochs=p["first_n_epochs"])


def _acquisition_from(params: dict):
    name = params["acquisition"]
    if name == "lcb":
        return LowerConfidenceBound(params["kappa"])
    if name == "ei":
        return ExpectedImprovement(0.0)  # incumbent injected per step
    return PosteriorMean()


def engine_config_for(
    config: ExperimentConfig, problem: Problem, mode: str, repetition: int
) -> EngineConfig:
    """Engine settings for one run; derived seed = base seed + repetition."""
    params = config.engine_params(mode)
    t0, t1 = problem.horizon
    interval = params["fixed_interval"]
    if interval is None:
        total = params["warmup_lhd"] + params["warmup_bo_steps"] + params["budget"]
        interval = (t1 - t0) / (total + 1)
    lookahead = params["min_lookahead"]
    if lookahead is None:
        lookahead = 0.1 * interval
    return EngineConfig(
        mode=Mode(mode),
        budget=params["budget"],
        min_lookahead=lookahead,
        lookahead_fraction=params["lookahead_fraction"],
        fixed_interval=interval,
        warmup=WarmupConfig(
            lhd=params["warmup_lhd"],
            bo_steps=params["warmup_bo_steps"],
            span=params["warmup_span"],
        ),
        detector=DetectorConfig(params["detector_window"], params["detector_rate"]),
        flexible_heuristics=params["flexible_heuristics"],
        acquisition=_acquisition_from(params),
        kernel=KernelSpec(
            KernelForm(params["kernel_spatial"]), KernelForm(params["kernel_temporal"])
        ),
        seed=config.base_seed + repetition,
        train=TrainConfig(
            restarts=params["train_restarts"],
            max_iters=params["train_max_iters"],
            tie_lengthscales=params["tie_lengthscales"],
        ),
        freeze_after_warmup=params["freeze_after_warmup"],
        pso=PsoConfig(
            particles=params["pso_particles"], iterations=params["pso_iterations"]
        ),
    )


# ---------------------------------------------------------------------------
# trace and summary files


def _fmt(value: float) -> str:
    return repr(float(value))


def trace_header(spatial_dim: int) -> list[str]:
    xs = [f"x_{i}" for i in range(spatial_dim)]
    return ["step", "phase", "heuristic", "t", *xs, "y", "lt_hat", "window_lo", "window_hi"]


def write_trace_csv(path, trace: RunTrace, spatial_dim: int):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trace_header(spatial_dim))
        for s in trace.steps:
            writer.writerow(
                [s.index, s.phase, s.heuristic, _fmt(s.t),
                 *(_fmt(v) for v in s.x), _fmt(s.y), _fmt(s.lt_hat),
                 _fmt(s.window_lo), _fmt(s.window_hi)]
            )


def read_trace_csv(path):
    """Rows of a trace file as dicts with typed step/t/y/phase fields."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"step", "phase", "t", "y"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(f"{path}: not a trace file (missing {sorted(required)})")
        rows = []
        for row in reader:
            rows.append(
                {
                    "step": int(row["step"]),
                    "phase": row["phase"],
                    "t": float(row["t"]),
                    "y": float(row["y"]),
                }
            )
    return rows


def trace_filename(mode: str, repetition: int) -> str:
    return f"{TRACE_PREFIX}_{mode}_rep{repetition}.csv"


def write_summary_csv(path, rows):
    """``rows`` are (mode, repetition_label, B, steps, pct, partial)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["mode", "repetition", "B", "steps", "iters_pct_diff", "partial"])
        for mode, rep, b, steps, pct, partial in rows:
            writer.writerow([mode, rep, _fmt(b), _fmt(steps), _fmt(pct), partial])


def write_plot_data(trace_path, out_path, window: int):
    """Long-format table per trace: step,t,y,best_so_far,b_t,phase.

    ``best_so_far`` runs over every evaluation; the trailing-window best is
    defined on the scored series only, so warmup rows leave it blank.
    """
    rows = read_trace_csv(trace_path)
    if not rows:
        raise ValueError(f"{trace_path}: empty trace")
    running = best_so_far([r["y"] for r in rows])
    scored_y = [r["y"] for r in rows if r["phase"] == "scored"]
    wb = iter(windowed_best(ScoredSeries(scored_y, window)) if scored_y else [])
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "t", "y", "best_so_far", "b_t", "phase"])
        for row, bsf in zip(rows, running):
            b_t = _fmt(next(wb)) if row["phase"] == "scored" else ""
            writer.writerow(
                [row["step"], _fmt(row["t"]), _fmt(row["y"]), _fmt(bsf), b_t, row["phase"]]
            )


# ---------------------------------------------------------------------------
# verbs


def cmd_validate(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return EXIT_IO
    sys.stdout.write(config.canonical_json())
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as err:
        print(str(err), file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return EXIT_IO

    try:
        problem = build_problem(config)
    except (ValueError, KeyError) as err:
        print(f"problem construction failed: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"cannot read problem data: {err}", file=sys.stderr)
        return EXIT_IO

    out_dir = config.output_dir
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        print(f"cannot create output directory: {err}", file=sys.stderr)
        return EXIT_IO

    emit = config.data
    summary_rows = []
    traces: dict[str, list[RunTrace]] = {}
    try:
        for mode in config.modes:
            traces[mode] = []
            for rep in range(config.repetitions):
                engine_cfg = engine_config_for(config, problem, mode, rep)
                trace = run(problem, engine_cfg)
                traces[mode].append(trace)
                if emit["emit_traces"]:
                    path = out_dir / trace_filename(mode, rep)
                    write_trace_csv(path, trace, problem.spatial_dim)
                    meta = {
                        "config_sha256": config.sha256(),
                        "version": __version__,
                        "mode": mode,
                        "repetition": rep,
                        "seed": engine_cfg.seed,
                        "problem": problem.name,
                        "aborted": trace.aborted,
                    }
                    with open(path.with_suffix(".meta.json"), "w") as fh:
                        json.dump(meta, fh, sort_keys=True, indent=2)
                        fh.write("\n")
                    print(f"wrote {path}")
                    if emit["emit_plot_data"]:
                        plot_path = out_dir / (path.stem + ".plot.csv")
                        write_plot_data(path, plot_path, config.metric_window)
                        print(f"wrote {plot_path}")

            # per-mode rows and aggregates; the reference step count for the
            # iteration difference is the configured fixed-mode budget
            budget = config.engine_params(mode)["budget"]
            usable = [t for t in traces[mode] if t.n_scored > 0]
            stats = (
                summarize(usable, window=config.metric_window, reference_steps=budget)
                if usable
                else None
            )
            per_trace = iter(stats.per_trace if stats else [])
            for rep, trace in enumerate(traces[mode]):
                partial = int(trace.aborted)
                if trace.n_scored > 0:
                    ts = next(per_trace)
                    summary_rows.append(
                        (mode, rep, ts.offline_performance, ts.steps, ts.iters_pct_diff, partial)
                    )
                else:
                    summary_rows.append((mode, rep, np.nan, 0, -100.0, partial))
            if stats:
                summary_rows.append(
                    (mode, "mean", stats.mean_performance, stats.mean_steps,
                     stats.mean_pct_diff, 0)
                )
                bs = [t.steps for t in stats.per_trace]
                summary_rows.append(
                    (mode, "std", stats.std_performance,
                     float(np.std(bs, ddof=1)) if len(bs) > 1 else 0.0,
                     float(np.std([t.iters_pct_diff for t in stats.per_trace], ddof=1))
                     if len(bs) > 1 else 0.0,
                     0)
                )
            else:
                summary_rows.append((mode, "mean", np.nan, np.nan, np.nan, 1))
                summary_rows.append((mode, "std", np.nan, np.nan, np.nan, 1))
    except OSError as err:
        print(f"cannot write outputs: {err}", file=sys.stderr)
        return EXIT_IO

    if emit["emit_summary"]:
        try:
            write_summary_csv(out_dir / SUMMARY_NAME, summary_rows)
        except OSError as err:
            print(f"cannot write summary: {err}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {out_dir / SUMMARY_NAME}")

    if all(t.aborted for ts in traces.values() for t in ts):
        print("every run aborted during model training", file=sys.stderr)
        return EXIT_ALL_ABORTED
    return EXIT_OK


def cmd_plot_data(args) -> int:
    for trace_path in args.traces:
        out_path = Path(trace_path).with_suffix(".plot.csv")
        try:
            write_plot_data(trace_path, out_path, args.window)
        except (OSError, ValueError) as err:
            print(f"cannot process {trace_path}: {err}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {out_path}")
    return EXIT_OK


def cmd_mpb_preview(args) -> int:
    presets = scenario_presets()["scenarios"]
    key = str(args.scenario)
    if key not in presets:
        print(f"unknown scenario {key!r}; have {sorted(presets)}", file=sys.stderr)
        return EXIT_CONFIG
    from dynabo.problems.mpb import _config_from_preset

    state = mpb_init(_config_from_preset(presets[key]), args.seed)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    d = state.config.dims
    writer.writerow(["step", "peak", "height", "width", *(f"loc_{i}" for i in range(d))])
    for step in range(args.steps + 1):
        for p in range(state.config.peaks):
            writer.writerow(
                [step, p, _fmt(state.heights[p]), _fmt(state.widths[p]),
                 *(_fmt(v) for v in state.locations[p])]
            )
        if step < args.steps:
            state = mpb_step(state)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynabo", description="Run time-varying optimization experiments."
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config", help="path to a JSON experiment config")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate a config, print normalized form")
    p_val.add_argument("config")
    p_val.set_defaults(func=cmd_validate)

    p_plot = sub.add_parser("plot-data", help="emit plot tables from trace files")
    p_plot.add_argument("traces", nargs="+", metavar="trace")
    p_plot.add_argument("--window", type=int, default=5,
                        help="trailing window for the windowed-best column")
    p_plot.set_defaults(func=cmd_plot_data)

    p_mpb = sub.add_parser("mpb-preview", help="print a moving-peaks change schedule")
    p_mpb.add_argument("scenario")
    p_mpb.add_argument("--steps", type=int, default=10)
    p_mpb.add_argument("--seed", type=int, default=0)
    p_mpb.set_defaults(func=cmd_mpb_preview)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
