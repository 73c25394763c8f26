"""Monte Carlo benchmark harness: RMSE tables, CCCP convergence traces, timing.

Reproducibility rule: trial ``t`` draws its target position and CCCP start
from ``make_rng(master_seed, t)`` and the measurement noise at noise-grid
index ``j`` from ``make_rng(master_seed, t, j + 1)``. Results are reduced by
trial index, so the output does not depend on the number of workers.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .crlb import crlb_position
from .errors import ConfigError, ExperimentFailure, TwToaError
from .estimators import METHODS, CccpConfig, MleState, amle, cccp_socp, lls, mle, sqls
from .model import EstimateReport, MeasurementBatch, NetworkScenario
from .simulator import NlosConfig, SimConfig, make_rng, simulate

log = logging.getLogger(__name__)

# Reference layout of the benchmark network, in metres. The fifth entry
# repeats the first one; fix_duplicate_anchor swaps it for an edge midpoint.
BENCH_ANCHORS = np.array([
    [800.0, 800.0],
    [800.0, -800.0],
    [-800.0, 800.0],
    [-800.0, -800.0],
    [800.0, 800.0],
    [0.0, 800.0],
    [-800.0, 0.0],
    [0.0, -800.0],
])
FIXED_A5 = np.array([800.0, 0.0])
MAX_FAILURE_RATE = 0.05
CSV_HEADER = ("method", "N", "K", "c_sigma_m", "trials", "failures", "rmse_m", "crlb_m")


def anchor_layout(n, fix_duplicate_anchor=False):
    if not 3 <= n <= len(BENCH_ANCHORS):
        raise ValueError(f"number of anchors must be in [3, {len(BENCH_ANCHORS)}]")
    a = BENCH_ANCHORS.copy()
    if fix_duplicate_anchor:
        a[4] = FIXED_A5
    return a[:n]


@dataclass(frozen=True)
class ExperimentSpec:
    """One Monte Carlo study. Noise levels are c*sigma in metres; c*gamma = ratio * c*sigma."""

    n_anchors: int = 6
    rounds: int = 2
    noise_grid: tuple = (10.0,)
    trials: int = 500
    methods: tuple = ("MLE", "LLS", "SQLS", "CCCP")
    master_seed: int = 0
    nlos_probability: float = 0.0
    nlos_bias_max_m: float = 5.0
    turnaround_s: float = 1e-6
    skew: float = 1.0001
    c: float = 3e8
    gamma_ratio: float = 1.0
    fix_duplicate_anchor: bool = False
    region_half_m: float = 800.0
    exclusion_m: float = 1.0
    cccp_max_outer: int = 3
    workers: int = 1
    noise_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "noise_grid", tuple(float(v) for v in self.noise_grid))
        object.__setattr__(self, "methods", tuple(str(m).upper() for m in self.methods))
        checks = [
            ("n_anchors", 3 <= self.n_anchors <= len(BENCH_ANCHORS), f"must be in [3, {len(BENCH_ANCHORS)}]"),
            ("k_rounds", self.rounds >= 1, "must be >= 1"),
            ("c_sigma_m", len(self.noise_grid) > 0 and all(v > 0 for v in self.noise_grid),
             "noise grid must be non-empty and strictly positive"),
            ("trials", self.trials >= 1, "must be >= 1"),
            ("methods", len(self.methods) > 0 and all(m in METHODS for m in self.methods),
             f"must be a non-empty subset of {list(METHODS)}"),
            ("nlos", 0.0 <= self.nlos_probability <= 1.0, "probability must lie in [0, 1]"),
            ("nlos", self.nlos_bias_max_m >= 0, "bias_max_m must be non-negative"),
            ("turnaround_s", self.turnaround_s >= 0, "must be non-negative"),
            ("skew", abs(self.skew - 1.0) <= 0.01, "must satisfy |skew - 1| <= 0.01"),
            ("c_m_per_s", self.c > 0, "must be positive"),
            ("gamma_ratio", self.gamma_ratio > 0, "must be positive"),
            ("cccp_max_outer", self.cccp_max_outer >= 1, "must be >= 1"),
            ("workers", self.workers >= 1, "must be >= 1"),
            ("noise_scale", self.noise_scale >= 0, "must be non-negative"),
        ]
        for name, ok, msg in checks:
            if not ok:
                raise ConfigError(name, msg)

    @property
    def anchors(self):
        return anchor_layout(self.n_anchors, self.fix_duplicate_anchor)

    @property
    def nlos(self):
        if self.nlos_probability <= 0:
            return None
        return NlosConfig.from_meters(self.nlos_probability, self.nlos_bias_max_m, self.c)

    def scenario(self, target, c_sigma_m):
        return NetworkScenario.from_meters(
            self.anchors, target, c_sigma_m=c_sigma_m, c_gamma_m=c_sigma_m * self.gamma_ratio,
            turnaround_s=self.turnaround_s, skew=self.skew, c=self.c, rounds=self.rounds)


def draw_target(spec: ExperimentSpec, rng):
    """Uniform over the square region, rejecting a small disc around each anchor."""
    h = spec.region_half_m
    while True:
        x = rng.uniform(-h, h, size=2)
        if np.all(np.linalg.norm(spec.anchors - x, axis=1) > spec.exclusion_m):
            return x


def run_estimator(method, batch: MeasurementBatch, scenario: NetworkScenario,
                  cccp: CccpConfig = CccpConfig()) -> EstimateReport:
    """Dispatch by name. MLE and AMLE start at the ground truth (benchmark convention)."""
    a, c, sg, gm = scenario.anchors, scenario.c, scenario.sigma, scenario.gamma
    m = method.upper()
    if m == "MLE":
        init = MleState(scenario.target, scenario.target_clock.skew, scenario.turnaround)
        return mle(batch, a, sg, gm, c, init)
    if m == "AMLE":
        return amle(batch, a, sg, gm, c, (scenario.target, scenario.target_clock.skew))
    if m == "LLS":
        return lls(batch, a, c, sg, gm)
    if m == "SQLS":
        return sqls(batch, a, c, sg, gm)
    if m == "CCCP":
        return cccp_socp(batch, a, c, cccp)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class TrialResult:
    trial: int
    noise_index: int
    method: str
    ok: bool
    sq_error: float
    position: tuple
    skew: float
    status: str
    iterations: int
    residual_l1: float
    seconds: float


def _run_trial(spec: ExperimentSpec, trial: int):
    geo = make_rng(spec.master_seed, trial)
    target = draw_target(spec, geo)
    h = spec.region_half_m
    x0 = tuple(geo.uniform(-h, h, size=2))
    cccp = CccpConfig(max_outer=spec.cccp_max_outer, x0=x0)
    out, bounds = [], []
    for j, cs in enumerate(spec.noise_grid):
        scen = spec.scenario(target, cs)
        bounds.append(crlb_position(scen))
        batch = simulate(scen, SimConfig(seed=spec.master_seed, nlos=spec.nlos,
                                         noise_scale=spec.noise_scale),
                         make_rng(spec.master_seed, trial, j + 1))
        for m in spec.methods:
            t0 = time.perf_counter()
            try:
                rep = run_estimator(m, batch, scen, cccp)
                ok = bool(np.all(np.isfinite(rep.position)) and np.isfinite(rep.skew))
            except (TwToaError, np.linalg.LinAlgError, ValueError) as exc:
                log.info("trial %d %s c_sigma=%g failed: %s", trial, m, cs, exc)
                rep, ok = None, False
            dt = time.perf_counter() - t0
            if ok:
                out.append(TrialResult(trial, j, m, True, rep.error(target) ** 2, tuple(rep.position),
                                       rep.skew, str(rep.status), rep.iterations, rep.residual_l1, dt))
            else:
                out.append(TrialResult(trial, j, m, False, math.nan, (math.nan, math.nan),
                                       math.nan, "Failed", 0, math.nan, dt))
    return out, bounds


def _run_chunk(args):
    spec, trials = args
    return [_run_trial(spec, t) for t in trials]


def run_trials(spec: ExperimentSpec):
    """Per-trial results ordered by trial index (independent of worker count)."""
    idx = list(range(spec.trials))
    if spec.workers <= 1:
        return [_run_trial(spec, t) for t in idx]
    chunks = [idx[i::spec.workers] for i in range(spec.workers)]
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        parts = list(pool.map(_run_chunk, [(spec, ch) for ch in chunks]))
    by_trial = {}
    for ch, res in zip(chunks, parts):
        by_trial.update(zip(ch, res))
    return [by_trial[t] for t in idx]


@dataclass(frozen=True)
class RmseRow:
    method: str
    N: int
    K: int
    c_sigma_m: float
    trials: int
    failures: int
    rmse_m: float
    crlb_m: float


@dataclass
class RmseTable:
    rows: list
    details: list = field(default_factory=list, repr=False)

    def row(self, method, c_sigma_m):
        for r in self.rows:
            if r.method == method and r.c_sigma_m == c_sigma_m:
                return r
        raise KeyError((method, c_sigma_m))

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.rows:
                w.writerow((r.method, r.N, r.K, repr(r.c_sigma_m), r.trials, r.failures,
                            repr(r.rmse_m), repr(r.crlb_m)))

    def write_details(self, path, spec: ExperimentSpec):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("method", "x1", "x2", "w", "status", "iterations", "residual", "seed",
                        "trial", "c_sigma_m", "sq_error_m2"))
            for d in self.details:
                w.writerow((d.method, repr(d.position[0]), repr(d.position[1]), repr(d.skew), d.status,
                            d.iterations, repr(d.residual_l1), spec.master_seed, d.trial,
                            repr(spec.noise_grid[d.noise_index]), repr(d.sq_error)))


def run_experiment(spec: ExperimentSpec) -> RmseTable:
    """RMSE per (method, noise level) over successful trials.

    Raises ExperimentFailure (carrying the finished table) when any row has
    more than 5% failed trials.
    """
    results = run_trials(spec)
    details = [r for res, _ in results for r in res]
    bounds = np.array([b for _, b in results])
    rows = []
    for j, cs in enumerate(spec.noise_grid):
        crlb_m = float(np.sqrt(np.mean(bounds[:, j])))
        for m in spec.methods:
            sel = [d for d in details if d.noise_index == j and d.method == m]
            good = [d.sq_error for d in sel if d.ok]
            fails = len(sel) - len(good)
            rmse = float(np.sqrt(np.mean(good))) if good else math.nan
            rows.append(RmseRow(m, spec.n_anchors, spec.rounds, cs, len(sel), fails, rmse, crlb_m))
    table = RmseTable(rows, details)
    bad = [r for r in rows if r.failures > MAX_FAILURE_RATE * r.trials]
    if bad:
        msg = ", ".join(f"{r.method}@{r.c_sigma_m:g}m: {r.failures}/{r.trials}" for r in bad)
        err = ExperimentFailure(f"failure rate above {MAX_FAILURE_RATE:.0%}: {msg}")
        err.table = table
        raise err
    return table


def bench_crlb(spec: ExperimentSpec):
    """sqrt of the trial-averaged position CRLB per noise level, in metres."""
    out = []
    for cs in spec.noise_grid:
        vals = [crlb_position(spec.scenario(draw_target(spec, make_rng(spec.master_seed, t)), cs))
                for t in range(spec.trials)]
        out.append((cs, float(np.sqrt(np.mean(vals)))))
    return out


def convergence_trace(spec: ExperimentSpec, inits=50, max_outer=10):
    """l1 residual traces (seconds) of CCCP from ``inits`` random starts on one batch."""
    geo = make_rng(spec.master_seed, 0)
    target = draw_target(spec, geo)
    scen = spec.scenario(target, spec.noise_grid[0])
    batch = simulate(scen, SimConfig(seed=spec.master_seed, nlos=spec.nlos, noise_scale=spec.noise_scale),
                     make_rng(spec.master_seed, 0, 1))
    starts = make_rng(spec.master_seed, 0, 0, 1)
    h = spec.region_half_m
    traces = []
    for _ in range(inits):
        x0 = tuple(starts.uniform(-h, h, size=2))
        rep = cccp_socp(batch, scen.anchors, scen.c, CccpConfig(max_outer=max_outer, x0=x0))
        traces.append(rep.diagnostics["trace"])
    return traces


def write_traces(traces, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("init_id", "iter", "residual_l1_s"))
        for i, tr in enumerate(traces):
            for j, v in enumerate(tr):
                w.writerow((i, j, repr(float(v))))


@dataclass(frozen=True)
class TimingRow:
    method: str
    mean_ms: float
    mean_iterations: float
    trials: int


def timing_report(spec: ExperimentSpec):
    """Mean wall-clock per call and iteration count, for the first noise level only."""
    one = ExperimentSpec(**{**spec.__dict__, "noise_grid": spec.noise_grid[:1], "workers": 1})
    details = [r for res, _ in run_trials(one) for r in res]
    rows = []
    for m in one.methods:
        sel = [d for d in details if d.method == m]
        rows.append(TimingRow(m, 1e3 * float(np.mean([d.seconds for d in sel])),
                              float(np.mean([d.iterations for d in sel])), len(sel)))
    return rows


def write_timing(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("method", "mean_ms", "mean_iterations", "trials"))
        for r in rows:
            w.writerow((r.method, f"{r.mean_ms:.4f}", f"{r.mean_iterations:.2f}", r.trials))
