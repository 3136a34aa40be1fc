"""Experiment configuration, multi-run execution and report files.

Config files are line oriented.  Each non-blank line is either a section
header ``[name]``, a ``key = value`` pair belonging to the last header, or a
fully qualified ``section.key = value``.  ``#`` starts a comment.

Sections:

``static``     function, dimension
``parabola``   dynamics, tau, change_every (iterations), dimension, lower, upper
``mpb``        any field of :class:`cpsol.benchmarks.MpbConfig`
``algorithm``  name (cpsol | spso)
``swarm``      any field of :class:`cpsol.swarm.SwarmParams`
``run``        runs, base_seed, iterations, evaluations, changes, workers
``metrics``    mode (per_evaluation | per_iteration)
``output``     dir

Exactly one of ``static``, ``parabola`` and ``mpb`` must appear.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baseline import GlobalBestPSO
from .benchmarks import (STATIC_FUNCTIONS, BudgetExhausted, Environment, MovingParabola,
                         MovingPeaks, MpbConfig, StaticFunction)
from .core import RandomSource
from .metrics import MetricsTracker, RunReport, describe
from .swarm import CellularSwarm, SwarmParams

PROBLEM_SECTIONS = ("static", "parabola", "mpb")
SUMMARY_HEADER = ("algorithm", "problem", "runs", "metric", "mean", "stddev", "stderr")
ALGORITHMS = {"cpsol": CellularSwarm, "spso": GlobalBestPSO}

_PARABOLA_KEYS = {"dynamics": str, "tau": float, "change_every": int, "dimension": int,
                  "lower": float, "upper": float}
_STATIC_KEYS = {"function": str, "dimension": int}
_RUN_KEYS = {"runs": int, "base_seed": int, "iterations": int, "evaluations": int,
             "changes": int, "workers": int}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str
    problem_options: dict
    algorithm: str = "cpsol"
    swarm: dict = field(default_factory=dict)
    runs: int = 30
    base_seed: int = 0
    iterations: int | None = None
    evaluations: int | None = None
    changes: int | None = None
    workers: int = 1
    metrics_mode: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("run.runs must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")

    # -- derived settings ---------------------------------------------------

    @property
    def mpb(self) -> MpbConfig:
        return MpbConfig(**self.problem_options)

    def swarm_params(self) -> SwarmParams:
        if self.problem == "mpb":
            return SwarmParams.mpb_defaults(**self.swarm)
        return SwarmParams.static_defaults(**self.swarm)

    @property
    def sampling(self) -> str:
        if self.metrics_mode:
            return self.metrics_mode
        return "per_iteration" if self.problem == "static" else "per_evaluation"

    @property
    def change_every(self):
        if self.problem == "parabola":
            return self.problem_options.get("change_every", 1000)
        if self.problem == "mpb":
            return self.mpb.change_every
        return None

    def limits(self):
        """``(iterations, evaluations)`` that end a run."""
        iterations, evaluations = self.iterations, self.evaluations
        if iterations is None and evaluations is None:
            if self.problem == "static":
                iterations = 1000
            elif self.problem == "parabola":
                iterations = (self.changes or 10) * self.change_every
            else:
                evaluations = (self.changes or 100) * self.change_every
        return iterations, evaluations

    def problem_name(self) -> str:
        o = self.problem_options
        if self.problem == "static":
            return f"{o['function']}-D{o.get('dimension', 20)}"
        if self.problem == "parabola":
            return (f"parabola-{o.get('dynamics', 'linear')}-tau{o.get('tau', 0.1):g}"
                    f"-f{self.change_every}-D{o.get('dimension', 30)}")
        m = self.mpb
        return f"mpb-m{m.peak_count}-f{m.change_every}-D{m.dimension}"

    def make_environment(self, src: RandomSource, tracker=None) -> Environment:
        o = self.problem_options
        _, evaluations = self.limits()
        if self.problem == "static":
            land = StaticFunction(o["function"], o.get("dimension", 20))
            return Environment(land, max_evals=evaluations, tracker=tracker)
        if self.problem == "parabola":
            land = MovingParabola(o.get("dimension", 30), o.get("dynamics", "linear"), o.get("tau", 0.1),
                                  (o.get("lower", -50.0), o.get("upper", 50.0)))
            return Environment(land, src, self.change_every, "iterations", evaluations, tracker)
        cfg = self.mpb
        return Environment(MovingPeaks.initial(cfg, src), src, cfg.change_every, "evaluations",
                           evaluations, tracker)


# ---------------------------------------------------------------------------
# parsing


def _parse_value(raw: str, kind, lineno: int, key: str):
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind is tuple:
            return tuple(float(v) for v in raw.split(","))
        if kind == "optional_float":
            return None if raw.lower() == "none" else float(raw)
        if kind == "optional_int":
            return None if raw.lower() == "none" else int(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {raw!r} for {key}") from None


def _dataclass_kinds(cls) -> dict:
    kinds = {}
    for f in dataclasses.fields(cls):
        t = str(f.type)
        if "tuple" in t:
            kinds[f.name] = tuple
        elif "None" in t:
            kinds[f.name] = "optional_float" if "float" in t else "optional_int"
        elif "bool" in t:
            kinds[f.name] = bool
        elif "int" in t:
            kinds[f.name] = int
        elif "float" in t:
            kinds[f.name] = float
        else:
            kinds[f.name] = str
    return kinds


_SECTION_KEYS = {
    "static": _STATIC_KEYS,
    "parabola": _PARABOLA_KEYS,
    "mpb": _dataclass_kinds(MpbConfig),
    "swarm": _dataclass_kinds(SwarmParams),
    "algorithm": {"name": str},
    "run": _RUN_KEYS,
    "metrics": {"mode": str},
    "output": {"dir": str},
}


def load_config(text: str) -> ExperimentConfig:
    sections: dict[str, dict] = {}
    first_line: dict[str, int] = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in _SECTION_KEYS:
                raise ConfigError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            first_line.setdefault(current, lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if "." in key:
            section, key = key.split(".", 1)
        elif current is not None:
            section = current
        else:
            raise ConfigError(f"line {lineno}: key {key!r} outside any section")
        if section not in _SECTION_KEYS:
            raise ConfigError(f"line {lineno}: unknown section {section!r}")
        kinds = _SECTION_KEYS[section]
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {section}.{key}")
        sections.setdefault(section, {})[key] = _parse_value(raw, kinds[key], lineno, f"{section}.{key}")
        first_line.setdefault(section, lineno)

    problems = [s for s in PROBLEM_SECTIONS if s in sections]
    if not problems:
        raise ConfigError("no problem section (static, parabola or mpb)")
    if len(problems) > 1:
        second = sorted(problems, key=first_line.get)[1]
        raise ConfigError(f"line {first_line[second]}: conflicting problem sections {problems}")
    problem = problems[0]
    options = sections[problem]
    if problem == "static":
        if "function" not in options:
            raise ConfigError(f"line {first_line['static']}: static.function is required")
        if options["function"] not in STATIC_FUNCTIONS:
            raise ConfigError(f"line {first_line['static']}: unknown function {options['function']!r}")
    if problem == "mpb":
        for key in ("height_range", "width_range", "bounds"):
            if key in options and len(options[key]) != 2:
                raise ConfigError(f"mpb.{key} needs two comma separated values")

    run = sections.get("run", {})
    try:
        return ExperimentConfig(
            problem=problem,
            problem_options=options,
            algorithm=sections.get("algorithm", {}).get("name", "cpsol"),
            swarm=sections.get("swarm", {}),
            runs=run.get("runs", 30),
            base_seed=run.get("base_seed", 0),
            iterations=run.get("iterations"),
            evaluations=run.get("evaluations"),
            changes=run.get("changes"),
            workers=run.get("workers", 1),
            metrics_mode=sections.get("metrics", {}).get("mode"),
            out_dir=sections.get("output", {}).get("dir"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# running


def algorithm_seed(seed: int) -> int:
    """Seed of the optimiser's own stream; the landscape uses ``seed``."""
    return int(np.random.SeedSequence([seed, 1]).generate_state(1, np.uint64)[0])


def run_single(cfg: ExperimentConfig, run_index: int):
    """One independent run; returns ``(RunReport, MetricsTracker, optimiser)``."""
    seed = cfg.base_seed + run_index
    tracker = MetricsTracker(cfg.sampling, maximize=cfg.problem == "mpb")
    env = cfg.make_environment(RandomSource(seed), tracker)
    iterations, _ = cfg.limits()
    try:
        alg = ALGORITHMS[cfg.algorithm](cfg.swarm_params(), env, RandomSource(algorithm_seed(seed)))
        while iterations is None or alg.iteration < iterations:
            alg.iterate()
    except BudgetExhausted:
        pass
    if cfg.sampling == "per_iteration" and env.evals and tracker.last_index != env.evals:
        tracker.record(env.evals, env.best_since_change, env.optimum())
    gap = tracker.offline_error("gap") if tracker.errors() is not None else None
    report = RunReport(
        seed=seed,
        offline_error_raw=tracker.offline_error("raw"),
        offline_error_gap=gap,
        best_final=env.best_since_change,
        evals_total=env.evals,
        changes_detected=alg.changes_detected,
        changes_total=env.changes,
        iterations=alg.iteration,
    )
    return report, tracker, alg


def _run_for_pool(args):
    cfg, k = args
    report, tracker, _ = run_single(cfg, k)
    return k, report, tracker.to_csv()


@dataclass
class SummaryReport:
    algorithm: str
    problem: str
    runs: list
    traces: list

    def values(self, metric: str):
        vals = [getattr(r, metric) for r in self.runs]
        return None if any(v is None for v in vals) else vals

    def best_final(self) -> float:
        """Best final fitness over all runs."""
        vals = [r.best_final for r in self.runs]
        return max(vals) if self.problem.startswith("mpb") else min(vals)

    def rows(self):
        out = []
        for metric in ("offline_error_raw", "offline_error_gap", "best_final", "evals_total"):
            vals = self.values(metric)
            if vals is None or len(vals) < 2:
                continue
            mean, std, se = describe(vals)
            out.append((self.algorithm, self.problem, len(vals), metric, mean, std, se))
        return out


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None, only=None) -> SummaryReport:
    """Run every seed of ``cfg`` (or just the indices in ``only``) and write
    the report when an output directory is known."""
    indices = list(range(cfg.runs)) if only is None else list(only)
    jobs = [(cfg, k) for k in indices]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_run_for_pool, jobs))
    else:
        results = [_run_for_pool(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    report = SummaryReport(cfg.algorithm, cfg.problem_name(), [r[1] for r in results],
                           [(r[0], r[2]) for r in results])
    out_dir = out_dir or cfg.out_dir
    if out_dir:
        write_report(report, out_dir, summary=only is None)
    return report


def format_summary(report: SummaryReport) -> str:
    buf = io.StringIO()
    buf.write(",".join(SUMMARY_HEADER) + "\n")
    for alg, prob, n, metric, mean, std, se in report.rows():
        buf.write(f"{alg},{prob},{n},{metric},{mean:.6f},{std:.6f},{se:.6f}\n")
    return buf.getvalue()


def write_report(report: SummaryReport, out_dir: str, summary: bool = True) -> list:
    """Write ``run_<k>.csv`` traces and ``summary.csv``; returns the paths."""
    paths = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for k, text in report.traces:
            path = os.path.join(out_dir, f"run_{k}.csv")
            with open(path, "w", newline="") as fh:
                fh.write(text)
            paths.append(path)
        if summary:
            path = os.path.join(out_dir, "summary.csv")
            with open(path, "w", newline="") as fh:
                fh.write(format_summary(report))
            paths.append(path)
    except OSError as exc:
        raise OSError(f"cannot write report to {out_dir}: {exc.strerror or exc}") from exc
    return paths


def read_summary(path: str) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["runs"] = int(r["runs"])
        for key in ("mean", "stddev", "stderr"):
            r[key] = float(r[key])
    return rows


def collect_summaries(root: str) -> list:
    """All summary rows below ``root``, tagged with their directory."""
    rows = []
    for dirpath, _, files in sorted(os.walk(root)):
        if "summary.csv" in files:
            for r in read_summary(os.path.join(dirpath, "summary.csv")):
                r["dir"] = os.path.relpath(dirpath, root)
                rows.append(r)
    return rows
