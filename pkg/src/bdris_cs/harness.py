"""
Monte Carlo driver: trials, sweeps, aggregation and result files.

Every trial draws its own RNG stream from ``(master seed, trial index)``, so
a trial produces the same channel, training and noise no matter which
sweep point, worker process or execution order it runs in.
"""

import csv
import dataclasses
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import estimators
from .dictionary import build_dictionaries, true_support
from .errors import InvalidArgument, NumericFailure, ResourceLimit
from .scenario import ScenarioConfig, draw_instance, true_composite_channel

log = logging.getLogger(__name__)

METHODS = ("storm", "star", "oracle_ls", "vectorized_cs")
SWEEP_KINDS = ("snr", "meas_fraction", "n_paths", "timing_kbar", "single")
CSV_COLUMNS = ("sweep_value", "method", "n_trials", "nmse_mean", "nmse_db", "nmse_std",
               "support_rate", "t_stage1_s", "t_stage2_s")

DEFAULT_SWEEPS = {
    "snr": [float(v) for v in range(-10, 31, 5)],
    "meas_fraction": [round(0.1 * i, 1) for i in range(1, 10)],
    "n_paths": [1, 2, 3, 4, 5, 6],
    "timing_kbar": [2, 4, 8, 16],
    "single": [0],
}


@dataclass
class SweepSpec:
    kind: str
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep_values: list = None
    methods: tuple = ("storm", "star", "oracle_ls")
    n_trials: int = 200
    master_seed: int = 0
    workers: int = 1
    vcs_budget: int = estimators.VCS_ATOM_BUDGET

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise InvalidArgument(f"unknown sweep kind {self.kind!r}")
        if self.sweep_values is None:
            self.sweep_values = list(DEFAULT_SWEEPS[self.kind])
        self.methods = tuple(self.methods)
        for m in self.methods:
            if m not in METHODS:
                raise InvalidArgument(f"unknown method {m!r}")
        if self.n_trials < 1:
            raise InvalidArgument("n_trials must be at least 1")
        if not self.sweep_values:
            raise InvalidArgument("sweep_values must not be empty")
        if list(self.sweep_values) != sorted(self.sweep_values):
            raise InvalidArgument("sweep_values must be sorted")


@dataclass
class TrialRecord:
    sweep_value: float
    trial: int
    method: str
    nmse: float | None
    support_exact: bool | None
    t_stage1_s: float
    t_stage2_s: float
    failure: str | None = None


@dataclass
class CellSummary:
    sweep_value: float
    method: str
    n_trials: int
    nmse_mean: float
    nmse_db: float
    nmse_std: float
    support_rate: float
    t_stage1_s: float
    t_stage2_s: float
    n_failed: int = 0


@dataclass
class SweepResult:
    kind: str
    master_seed: int
    cells: list
    trials: list = field(default_factory=list)

    def cell(self, sweep_value, method):
        for c in self.cells:
            if c.sweep_value == sweep_value and c.method == method:
                return c
        raise KeyError((sweep_value, method))

    def series(self, method, attr="nmse_mean"):
        return [getattr(c, attr) for c in self.cells if c.method == method]


@dataclass
class TrialFailure:
    method: str
    error: str


def config_for(base, kind, value):
    if kind == "snr":
        return dataclasses.replace(base, snr_db=float(value))
    if kind == "meas_fraction":
        return dataclasses.replace(base, meas_fraction=float(value), n_frames=None)
    if kind == "n_paths":
        return dataclasses.replace(base, p_paths=int(value), sparsity=None)
    if kind == "timing_kbar":
        return base.with_groups(int(value))
    return base


def run_trial(cfg, methods, trial_idx, vcs_budget=estimators.VCS_ATOM_BUDGET):
    """Evaluate ``methods`` on one shared draw; returns ``{method: result}``.

    ``cfg.seed`` is the master seed. Estimator errors become
    :class:`TrialFailure` entries; a vectorized-CS budget overrun is raised,
    since no trial of that configuration can succeed.
    """
    if "vectorized_cs" in methods and cfg.n_grid ** 4 > vcs_budget:
        raise ResourceLimit(
            f"vectorized CS needs n_grid^4={cfg.n_grid ** 4} atoms, budget is {vcs_budget}"
        )
    rng = np.random.default_rng([cfg.seed, trial_idx])
    ch, tr, ms = draw_instance(cfg, rng)
    ds = build_dictionaries(cfg, tr)
    c_true = true_composite_channel(ch)
    truth = set(true_support(ch, ds))
    out = {}
    for m in methods:
        try:
            if m == "storm":
                res = estimators.storm(ms, ds, cfg, c_true)
            elif m == "star":
                res = estimators.star(ms, ds, cfg, c_true)
            elif m == "oracle_ls":
                res = estimators.oracle_ls(ms, ch, ds, cfg, c_true)
            else:
                res = estimators.vectorized_cs(ms, ds, cfg, c_true, budget=vcs_budget)
        except (InvalidArgument, NumericFailure) as exc:
            log.warning("trial %d: %s failed: %s", trial_idx, m, exc)
            out[m] = TrialFailure(m, f"{type(exc).__name__}: {exc}")
            continue
        res.support_exact = set(res.support) == truth
        out[m] = res
    return out


def _trial_records(job):
    value, cfg, methods, trial_idx, budget = job
    records = []
    for m, res in run_trial(cfg, methods, trial_idx, budget).items():
        if isinstance(res, TrialFailure):
            records.append(TrialRecord(value, trial_idx, m, None, None, 0.0, 0.0, res.error))
        else:
            records.append(TrialRecord(value, trial_idx, m, res.nmse, res.support_exact,
                                       res.stage1_time, res.stage2_time))
    return records


def _db(x):
    return 10 * math.log10(x) if x > 0 else -math.inf


def summarize(records, value, method, n_trials):
    ok = [r for r in records if r.failure is None]
    if ok:
        vals = np.array([r.nmse for r in ok])
        mean = float(np.mean(vals))
        std = float(np.std(vals))
        rate = sum(bool(r.support_exact) for r in ok) / len(ok)
        t1 = float(np.mean([r.t_stage1_s for r in ok]))
        t2 = float(np.mean([r.t_stage2_s for r in ok]))
    else:
        mean = std = rate = t1 = t2 = math.nan
    return CellSummary(value, method, n_trials, mean, _db(mean) if ok else math.nan, std,
                       rate, t1, t2, n_failed=len(records) - len(ok))


def run_sweep(spec):
    base = dataclasses.replace(spec.base, seed=spec.master_seed)
    jobs = []
    for value in spec.sweep_values:
        cfg = config_for(base, spec.kind, value).validate()
        if "vectorized_cs" in spec.methods and cfg.n_grid ** 4 > spec.vcs_budget:
            raise ResourceLimit(
                f"vectorized CS needs {cfg.n_grid ** 4} atoms at {spec.kind}={value}, "
                f"budget is {spec.vcs_budget}"
            )
        jobs += [(value, cfg, spec.methods, t, spec.vcs_budget) for t in range(spec.n_trials)]

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            batches = list(pool.map(_trial_records, jobs, chunksize=4))
    else:
        batches = [_trial_records(job) for job in jobs]
    records = [r for batch in batches for r in batch]
    records.sort(key=lambda r: (spec.sweep_values.index(r.sweep_value),
                                spec.methods.index(r.method), r.trial))

    cells = []
    for value in spec.sweep_values:
        for m in spec.methods:
            cell_records = [r for r in records if r.sweep_value == value and r.method == m]
            cells.append(summarize(cell_records, value, m, spec.n_trials))
    return SweepResult(spec.kind, spec.master_seed, cells, records)


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write(result, fmt, fh):
    if fmt == "csv":
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for c in result.cells:
            writer.writerow([_fmt(getattr(c, k)) for k in CSV_COLUMNS])
    else:
        doc = {
            "kind": result.kind,
            "master_seed": result.master_seed,
            "cells": [dataclasses.asdict(c) for c in result.cells],
            "trials": [dataclasses.asdict(t) for t in result.trials],
        }
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def emit(result, fmt, path):
    """Write ``result`` as CSV (one row per cell) or JSON (cells and trials).

    ``path`` may be ``"-"`` for standard output.
    """
    if fmt not in ("csv", "json"):
        raise InvalidArgument(f"unknown output format {fmt!r}")
    if str(path) == "-":
        _write(result, fmt, sys.stdout)
        return
    try:
        with open(path, "w", newline="") as fh:
            _write(result, fmt, fh)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def load_json(path):
    with open(path) as fh:
        doc = json.load(fh)
    return SweepResult(
        doc["kind"],
        doc["master_seed"],
        [CellSummary(**c) for c in doc["cells"]],
        [TrialRecord(**t) for t in doc["trials"]],
    )
