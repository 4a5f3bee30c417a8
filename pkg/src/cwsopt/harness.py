"""Config-driven experiment runner and command-line entry point.

Commands::

    cwsopt run <config.json>
    cwsopt sweep-weights <config.json> --steps N [--inner evolver|grid]
    cwsopt budget --k-max K --s S1,S2,...
    cwsopt front <points.csv> [--minimize COLS] [-o OUT]

Exit status is 0 on success, 2 for configuration errors and 3 for I/O
errors. ``CWSOPT_OUTPUT_ROOT`` relocates relative output directories.

Files written by ``run`` (per seed ``S``):

* ``history_seed<S>.csv``: ``generation,best_quality`` (scalarized) or
  ``generation,front_size`` (Pareto rank)
* ``front_seed<S>.csv``: one column per objective (raw values) plus ``rank``
* ``report.json``: per-seed summaries and aggregate statistics
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from .evolver import Mode, RunConfig, RunResult, evolve, grid_search, roi_fraction
from .objectives import ObjectiveSpec, SpecError, TunedNormalization, validate_spec
from .pareto import (
    ParetoRankAssessor,
    format_float,
    front_budget,
    non_dominated_mask,
    pareto_rank,
    read_points_csv,
    write_front_csv,
)
from .problems import InstanceError, ProblemDefinition, load_grid_instance, make_problem
from .scalarizers import (
    WEIGHT_SUM_TOL,
    CwsAssessor,
    CwsConfig,
    EpsilonConstrainedAssessor,
    PenaltySpec,
    WeightedSumAssessor,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
OUTPUT_ROOT_ENV = "CWSOPT_OUTPUT_ROOT"
EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
MODES = ("weighted_sum", "cws", "epsilon_constrained", "pareto_rank")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` holds field-level messages."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ExperimentConfig:
    problem: ProblemDefinition
    mode: str
    specs: tuple[ObjectiveSpec, ...]
    tunings: tuple[TunedNormalization | None, ...]
    penalties: tuple[PenaltySpec, ...]
    run: RunConfig
    seeds: tuple[int, ...]
    output_dir: Path
    region: tuple[tuple[float | None, float | None] | None, ...] | None = None
    groups: tuple[tuple[int, ...], ...] | None = None
    epsilon_objective: int | None = None
    epsilon_lower_bounds: tuple[float | None, ...] | None = None

    @property
    def run_mode(self) -> Mode:
        return Mode.PARETO_RANK if self.mode == "pareto_rank" else Mode.SCALARIZED

    def assessor(self):
        if self.mode == "weighted_sum":
            return WeightedSumAssessor(self.specs, self.penalties, self.tunings)
        if self.mode == "cws":
            config = CwsConfig(self.specs, self.groups) if self.groups else CwsConfig.from_specs(self.specs)
            return CwsAssessor(config, self.penalties, self.tunings)
        if self.mode == "epsilon_constrained":
            return EpsilonConstrainedAssessor(
                self.specs, self.epsilon_objective, self.epsilon_lower_bounds, self.penalties, self.tunings
            )
        return ParetoRankAssessor(self.specs, self.penalties)

    def with_weights(self, weights: Sequence[float]) -> ExperimentConfig:
        specs = tuple(replace(s, weight=float(w)) for s, w in zip(self.specs, weights))
        return replace(self, specs=specs)


@dataclass
class ExperimentReport:
    summaries: list[dict[str, Any]]
    aggregate: dict[str, Any]
    front_paths: list[Path] = field(default_factory=list)
    history_paths: list[Path] = field(default_factory=list)
    report_path: Path | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, "runs": self.summaries, "aggregate": self.aggregate}


# -- config parsing ------------------------------------------------------------


def _merge_specs(defaults: Sequence[ObjectiveSpec], entries, errors: list[str]):
    if entries is None:
        return tuple(defaults), (None,) * len(defaults)
    if not isinstance(entries, list) or len(entries) != len(defaults):
        errors.append(f"objectives: expected a list of {len(defaults)} entries")
        return tuple(defaults), (None,) * len(defaults)
    specs, tunings = [], []
    for i, (base, entry) in enumerate(zip(defaults, entries)):
        merged = {**base.to_dict(), **{k: v for k, v in entry.items() if k != "tuning"}}
        try:
            spec = ObjectiveSpec.from_dict(merged)
        except (KeyError, ValueError, TypeError) as exc:
            errors.append(f"objectives[{i}]: {exc}")
            spec = base
        errors.extend(f"objectives[{i}].{msg}" for msg in validate_spec(spec))
        specs.append(spec)
        tuning = entry.get("tuning")
        try:
            tunings.append(TunedNormalization.from_dict(tuning) if tuning else None)
        except (KeyError, ValueError, TypeError) as exc:
            errors.append(f"objectives[{i}].tuning: {exc}")
            tunings.append(None)
    return tuple(specs), tuple(tunings)


def _parse_region(raw, k: int, errors: list[str]):
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != k:
        errors.append(f"region_of_interest: expected {k} intervals (or null entries)")
        return None
    region = []
    for i, item in enumerate(raw):
        if item is None:
            region.append(None)
            continue
        try:
            lo, hi = item
            region.append((None if lo is None else float(lo), None if hi is None else float(hi)))
        except (TypeError, ValueError):
            errors.append(f"region_of_interest[{i}]: expected [low, high]")
            region.append(None)
    return tuple(region)


def parse_config(data: dict[str, Any], base_dir: Path | None = None) -> ExperimentConfig:
    """Validate a config mapping and build an :class:`ExperimentConfig`.

    Raises :class:`ConfigError` listing every problem found, each prefixed
    with the offending field.
    """
    base_dir = base_dir or Path.cwd()
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    if data.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"schema_version: expected {SCHEMA_VERSION}, got {data.get('schema_version')!r}")

    problem_field = data.get("problem")
    if isinstance(problem_field, str):
        problem_field = {"name": problem_field}
    problem = None
    if not isinstance(problem_field, dict) or "name" not in problem_field:
        errors.append("problem: expected a name or {name, instance}")
    else:
        try:
            instance = None
            if str(problem_field["name"]).lower() == "grid":
                if "instance" not in problem_field:
                    raise ConfigError(["problem.instance: the grid problem needs an instance file"])
                instance = load_grid_instance(base_dir / problem_field["instance"])
            problem = make_problem(str(problem_field["name"]), instance)
        except ConfigError as exc:
            errors.extend(exc.errors)
        except (InstanceError, json.JSONDecodeError) as exc:
            errors.append(f"problem.instance: {exc}")
        except ValueError as exc:
            errors.append(f"problem.name: {exc}")
    if problem is None:
        raise ConfigError(errors)

    mode = data.get("mode")
    if mode not in MODES:
        errors.append(f"mode: expected one of {', '.join(MODES)}, got {mode!r}")

    specs, tunings = _merge_specs(problem.objectives, data.get("objectives"), errors)

    if mode in ("weighted_sum", "cws", "epsilon_constrained"):
        total = sum(s.weight for s in specs)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            errors.append(f"objectives.weight: weights must sum to 1 (got {total:.12g})")

    groups = None
    if mode == "cws":
        raw_groups = data.get("groups")
        try:
            if raw_groups is not None:
                groups = tuple(tuple(int(i) for i in g) for g in raw_groups)
                CwsConfig(specs, groups)
            else:
                CwsConfig.from_specs(specs)
        except (SpecError, TypeError, ValueError) as exc:
            errors.append(f"groups: {exc}")

    eps_objective = eps_bounds = None
    if mode == "epsilon_constrained":
        eps = data.get("epsilon")
        if not isinstance(eps, dict):
            errors.append("epsilon: expected {objective, lower_bounds}")
        else:
            try:
                eps_objective = int(eps["objective"])
                eps_bounds = tuple(None if v is None else float(v) for v in eps["lower_bounds"])
                EpsilonConstrainedAssessor(specs, eps_objective, eps_bounds)
            except (KeyError, TypeError, ValueError, IndexError, SpecError) as exc:
                errors.append(f"epsilon: {exc}")

    penalties = problem.default_penalties
    if "penalties" in data:
        try:
            penalties = tuple(PenaltySpec.from_dict(p) for p in data["penalties"])
        except (KeyError, TypeError, ValueError) as exc:
            errors.append(f"penalties: {exc}")
    if len(penalties) != len(problem.violation_names):
        errors.append(
            f"penalties: problem {problem.name!r} reports {len(problem.violation_names)} violations, "
            f"{len(penalties)} penalty functions given"
        )

    run = RunConfig()
    try:
        run_fields = {k: v for k, v in data.get("run", {}).items() if k not in ("seed", "mode")}
        run = RunConfig.from_dict(run_fields)
    except (TypeError, ValueError) as exc:
        errors.append(f"run: {exc}")
    seeds = data.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and 0 <= s < 2**64 for s in seeds):
        errors.append("seeds: expected a non-empty list of unsigned 64-bit integers")
        seeds = [0]
    run_mode = Mode.PARETO_RANK if mode == "pareto_rank" else Mode.SCALARIZED
    run = replace(run, seed=seeds[0], mode=run_mode)
    errors.extend(f"run.{msg}" for msg in run.validate())

    region = _parse_region(data.get("region_of_interest"), len(specs), errors)

    out = data.get("output_dir")
    if not isinstance(out, str) or not out:
        errors.append("output_dir: expected a path")
        out = "."
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        problem=problem,
        mode=mode,
        specs=specs,
        tunings=tunings,
        penalties=penalties,
        run=run,
        seeds=tuple(seeds),
        output_dir=resolve_output_dir(out, base_dir),
        region=region,
        groups=groups,
        epsilon_objective=eps_objective,
        epsilon_lower_bounds=eps_bounds,
    )


def resolve_output_dir(path: str, base_dir: Path) -> Path:
    p = Path(path)
    if p.is_absolute():
        return p
    root = os.environ.get(OUTPUT_ROOT_ENV)
    return (Path(root) if root else base_dir) / p


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"<file>: invalid JSON ({exc})"]) from exc
    return parse_config(data, path.parent)


# -- commands ----------------------------------------------------------------


def _write_history(path: Path, result: RunResult) -> None:
    label = "best_quality" if result.mode is Mode.SCALARIZED else "front_size"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", label])
        for g, value in enumerate(result.best_history):
            writer.writerow([g, format_float(value)])


def _oriented(specs: Sequence[ObjectiveSpec], raw: np.ndarray) -> np.ndarray:
    return ParetoRankAssessor(specs).oriented(raw)


def run_seed(config: ExperimentConfig, seed: int) -> RunResult:
    return evolve(config.problem, config.assessor(), replace(config.run, seed=seed))


def execute(config: ExperimentConfig) -> ExperimentReport:
    """Run every seed and write history, front and report files."""
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    names = [s.name for s in config.specs]
    summaries, fronts, histories = [], [], []
    for seed in config.seeds:
        logger.info("running %s/%s seed %d", config.problem.name, config.mode, seed)
        result = run_seed(config, seed)
        raw = result.objectives()
        oriented = _oriented(config.specs, raw)
        ranks = pareto_rank(oriented)
        front_path = out / f"front_seed{seed}.csv"
        history_path = out / f"history_seed{seed}.csv"
        write_front_csv(front_path, raw, ranks, names)
        _write_history(history_path, result)
        summary = {"seed": seed, **result.to_summary()}
        if config.region is not None:
            summary["roi_fraction"] = roi_fraction(raw[non_dominated_mask(oriented)], config.region)
        summary["front_csv"] = front_path.name
        summary["history_csv"] = history_path.name
        summaries.append(summary)
        fronts.append(front_path)
        histories.append(history_path)

    aggregate: dict[str, Any] = {"runs": len(summaries)}
    qualities = [s["best_quality"] for s in summaries if s["best_quality"] is not None]
    if qualities:
        aggregate.update(
            mean_best_quality=float(np.mean(qualities)),
            min_best_quality=float(np.min(qualities)),
            max_best_quality=float(np.max(qualities)),
        )
    if config.region is not None:
        aggregate["mean_roi_fraction"] = float(np.mean([s["roi_fraction"] for s in summaries]))
    report = ExperimentReport(summaries, aggregate, fronts, histories)
    report.report_path = out / "report.json"
    with open(report.report_path, "w", newline="\n") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


@dataclass(frozen=True)
class SweepPoint:
    w1: float
    objectives: np.ndarray
    quality: float


def sweep_weights(
    config: ExperimentConfig,
    steps: int,
    inner: str = "evolver",
    resolution: int | Sequence[int] = 201,
    path: Path | None = None,
) -> list[SweepPoint]:
    """Optimize once per weight pair (i/steps, 1 - i/steps), i = 1..steps-1.

    ``inner`` selects the optimizer: the configured evolver (first seed) or
    an exhaustive grid search over the decision box. Writes
    ``sweep.csv`` (``w1,w2,<objective names>,quality``) unless ``path`` is
    given explicitly.
    """
    if len(config.specs) != 2:
        raise ConfigError([f"objectives: sweep-weights needs exactly 2 objectives, got {len(config.specs)}"])
    if config.mode not in ("weighted_sum", "cws"):
        raise ConfigError([f"mode: sweep-weights needs weighted_sum or cws, got {config.mode!r}"])
    if steps < 2:
        raise ConfigError(["steps: must be at least 2"])
    if inner not in ("evolver", "grid"):
        raise ConfigError([f"inner: expected evolver or grid, got {inner!r}"])
    points = []
    for i in range(1, steps):
        w1 = i / steps
        cfg = config.with_weights((w1, 1.0 - w1))
        if inner == "grid":
            found = grid_search(cfg.problem, cfg.assessor(), resolution)
            points.append(SweepPoint(w1, found.objectives, found.quality))
        else:
            best = run_seed(cfg, cfg.seeds[0]).best
            points.append(SweepPoint(w1, best.objectives, best.quality))
    if path is None:
        config.output_dir.mkdir(parents=True, exist_ok=True)
        path = config.output_dir / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["w1", "w2", *(s.name for s in config.specs), "quality"])
        for p in points:
            writer.writerow(
                [format_float(p.w1), format_float(1.0 - p.w1), *map(format_float, p.objectives), format_float(p.quality)]
            )
    return points


def budget_table(k_max: int, s_values: Sequence[int]) -> list[list[int | str]]:
    """Rows ``[k, s1^(k-1), s2^(k-1), ...]`` for k = 2..k_max; overflowing cells read ``overflow``."""
    if k_max < 2:
        raise ValueError(f"k_max must be at least 2, got {k_max}")
    rows: list[list[int | str]] = []
    for k in range(2, k_max + 1):
        row: list[int | str] = [k]
        for s in s_values:
            try:
                row.append(front_budget(k, s))
            except OverflowError:
                row.append("overflow")
        rows.append(row)
    return rows


def budget_csv(rows, s_values: Sequence[int]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", *(f"s={s}" for s in s_values)])
    writer.writerows(rows)
    return buf.getvalue()


def budget_text(rows, s_values: Sequence[int]) -> str:
    header = ["k", *(f"s={s}" for s in s_values)]
    cells = [header] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


# -- CLI -----------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cwsopt", description="Cascaded weighted sum experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every seed of an experiment config")
    p.add_argument("config")

    p = sub.add_parser("sweep-weights", help="one optimization per weight pair of a 2-objective config")
    p.add_argument("config")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--inner", choices=("evolver", "grid"), default="evolver")
    p.add_argument("--resolution", type=_int_list, default=[201])

    p = sub.add_parser("budget", help="front size s^(k-1) table")
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--s", type=_int_list, required=True)
    p.add_argument("--csv", help="also write the table as CSV to this path")

    p = sub.add_parser("front", help="non-dominated rows of a CSV of objective values")
    p.add_argument("points")
    p.add_argument("--minimize", type=_int_list, default=[], help="0-based columns to minimize")
    p.add_argument("-o", "--output", help="output CSV (default: stdout)")
    return parser


def _front_command(args) -> None:
    try:
        names, raw = read_points_csv(args.points)
    except ValueError as exc:
        raise ConfigError([f"points: {exc}"]) from exc
    signs = np.ones(raw.shape[1])
    for col in args.minimize:
        if not 0 <= col < raw.shape[1]:
            raise ConfigError([f"--minimize: column {col} out of range"])
        signs[col] = -1.0
    ranks = pareto_rank(raw * signs)
    keep = ranks == 0
    if args.output:
        write_front_csv(args.output, raw[keep], ranks[keep], names)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow([*names, "rank"])
        for row in raw[keep]:
            writer.writerow([*map(format_float, row), 0])


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if args.command == "run":
            report = execute(load_config(args.config))
            print(json.dumps(report.aggregate, sort_keys=True))
        elif args.command == "sweep-weights":
            config = load_config(args.config)
            resolution = args.resolution[0] if len(args.resolution) == 1 else args.resolution
            points = sweep_weights(config, args.steps, args.inner, resolution)
            print(f"{len(points)} sweep points written to {config.output_dir / 'sweep.csv'}")
        elif args.command == "budget":
            if args.k_max < 2:
                raise ConfigError(["--k-max: must be at least 2"])
            rows = budget_table(args.k_max, args.s)
            sys.stdout.write(budget_text(rows, args.s))
            if args.csv:
                Path(args.csv).write_text(budget_csv(rows, args.s))
        elif args.command == "front":
            _front_command(args)
    except ConfigError as exc:
        for msg in exc.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
