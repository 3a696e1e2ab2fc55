"""Ensemble experiment engine.

Runs many independent seeded trials of an estimator on a Scenario,
averages the per-iteration squared deviation and mismatch into learning
curves, extracts steady-state statistics, and pairs them with the
closed-form predictions.

Per-trial seeds come from SeedSequence(master_seed, trial_index), so the
trial set is reproducible and independent of execution order. Trials are
accumulated in fixed chunks of CHUNK trials summed in index order; the
reduction over chunk partials is also done in index order, so serial and
parallel execution produce bit-identical results.
"""

import concurrent.futures
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, theory
from .filters import ALGORITHMS, CLS, RCLS, DcdParams
from .model import DataStream, derive_context

__all__ = ["RunConfig", "LearningCurves", "run_trial", "run_ensemble", "sweep"]

CHUNK = 64

SWEEP_AXES = ("mu", "lambda", "eta")


@dataclass(frozen=True)
class RunConfig:
    """Controls for one ensemble run."""

    n_trials: int = 2000
    n_iters: int = 3000
    warmup: int = 2000
    steady_window: int = 1000
    master_seed: int = 1
    algorithm: str = RCLS
    dcd: DcdParams = field(default_factory=DcdParams)
    delta: float = 1e-2
    backend: str | None = None
    n_jobs: int = 1

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.steady_window < 1:
            raise ValueError("steady_window must be >= 1")
        if self.warmup + self.steady_window > self.n_iters:
            raise ValueError("need warmup + steady_window <= n_iters")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")

    @staticmethod
    def for_scenario(scenario, **overrides):
        """Desk-scale defaults: warmup 10/(1-lambda), window 1000."""
        warmup = int(np.ceil(10.0 / (1.0 - scenario.lam)))
        window = int(overrides.pop("steady_window", 1000))
        cfg = dict(warmup=warmup, steady_window=window,
                   n_iters=warmup + window)
        cfg.update(overrides)
        return RunConfig(**cfg)


@dataclass(frozen=True)
class LearningCurves:
    """Ensemble-averaged results of one run."""

    msd: np.ndarray          # E||d_n||^2 per iteration
    msm: np.ndarray          # E||m_n||^2 per iteration
    mean_dev: np.ndarray     # ensemble mean of final d (length L)
    mean_mis: np.ndarray     # ensemble mean of final m (length K)
    steady_msd: float
    steady_msm: float
    stderr_msd: float        # std error of the steady-state MSD estimate
    stderr_msm: float
    stderr_dev: np.ndarray   # per-component std errors of mean_dev
    stderr_mis: np.ndarray
    mean_updates: np.ndarray  # mean DCD updates per iteration (zeros otherwise)
    n_trials: int
    master_seed: int


def trial_seed(master_seed, trial_index):
    """Splittable per-trial seed: SeedSequence over (master_seed, index)."""
    return np.random.SeedSequence(entropy=int(master_seed),
                                  spawn_key=(int(trial_index),))


def run_trial(scenario, config, trial_index, g=None):
    """One seeded trial; returns (d2, m2, updates, final_d, final_m)."""
    if g is None:
        g = derive_context(scenario).g
    stream = DataStream(scenario, trial_seed(config.master_seed, trial_index))
    X, y, _ = stream.take(config.n_iters)
    algo_id = kernels.ALGO_IDS[config.algorithm]
    d2, m2, updates, w = kernels.run_trial_kernel(
        algo_id, np.ascontiguousarray(X), np.ascontiguousarray(y),
        scenario, np.ascontiguousarray(g), config.delta, config.dcd,
        backend=config.backend)
    final_d = w - g
    final_m = scenario.C.T @ w - scenario.f
    return d2, m2, updates, final_d, final_m


def _chunk_sums(scenario, config, g, start, stop):
    """In-order partial sums over trials [start, stop)."""
    n = config.n_iters
    L, K = scenario.L, scenario.K
    acc = {
        "d2": np.zeros(n), "m2": np.zeros(n), "upd": np.zeros(n),
        "dev": np.zeros(L), "dev2": np.zeros(L),
        "mis": np.zeros(K), "mis2": np.zeros(K),
        "win": 0.0, "win2": 0.0, "winm": 0.0, "winm2": 0.0,
    }
    w0 = config.n_iters - config.steady_window
    for idx in range(start, stop):
        d2, m2, updates, fd, fm = run_trial(scenario, config, idx, g=g)
        acc["d2"] += d2
        acc["m2"] += m2
        acc["upd"] += updates
        acc["dev"] += fd
        acc["dev2"] += fd * fd
        acc["mis"] += fm
        acc["mis2"] += fm * fm
        wmean = float(np.mean(d2[w0:]))
        wmmean = float(np.mean(m2[w0:]))
        acc["win"] += wmean
        acc["win2"] += wmean * wmean
        acc["winm"] += wmmean
        acc["winm2"] += wmmean * wmmean
    return acc


def run_ensemble(scenario, config, g=None):
    """Average run_trial over config.n_trials trials."""
    if g is None:
        g = derive_context(scenario).g
    bounds = list(range(0, config.n_trials, CHUNK)) + [config.n_trials]
    spans = list(zip(bounds[:-1], bounds[1:]))

    if config.n_jobs > 1 and len(spans) > 1:
        with concurrent.futures.ProcessPoolExecutor(config.n_jobs) as pool:
            futs = [pool.submit(_chunk_sums, scenario, config, g, a, b)
                    for a, b in spans]
            partials = [f.result() for f in futs]  # reduced in span order
    else:
        partials = [_chunk_sums(scenario, config, g, a, b) for a, b in spans]

    total = partials[0]
    for part in partials[1:]:
        for key in total:
            total[key] = total[key] + part[key]

    nt = config.n_trials
    msd = total["d2"] / nt
    msm = total["m2"] / nt
    mean_dev = total["dev"] / nt
    mean_mis = total["mis"] / nt
    w0 = config.n_iters - config.steady_window

    def _stderr(sum1, sum2):
        var = np.maximum(sum2 / nt - (sum1 / nt) ** 2, 0.0)
        return np.sqrt(var / max(nt - 1, 1))

    return LearningCurves(
        msd=msd, msm=msm, mean_dev=mean_dev, mean_mis=mean_mis,
        steady_msd=float(np.mean(msd[w0:])),
        steady_msm=float(np.mean(msm[w0:])),
        stderr_msd=float(_stderr(total["win"], total["win2"])),
        stderr_msm=float(_stderr(total["winm"], total["winm2"])),
        stderr_dev=_stderr(total["dev"], total["dev2"]),
        stderr_mis=_stderr(total["mis"], total["mis2"]),
        mean_updates=total["upd"] / nt,
        n_trials=nt, master_seed=config.master_seed,
    )


def sweep(scenario, config, axis, grid):
    """One ensemble plus one prediction per grid point along an axis.

    axis is "mu", "lambda" or "eta". Returns a list of row dicts mirroring
    the steady-state-versus-parameter comparison tables.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    if len(grid) == 0:
        raise ValueError("sweep grid is empty")
    rows = []
    for value in grid:
        point = scenario.with_params(**{"lam" if axis == "lambda" else axis:
                                        float(value)})
        cfg = config
        if axis == "lambda":
            # keep the window clear of the transient when lambda changes
            warmup = int(np.ceil(10.0 / (1.0 - point.lam)))
            cfg = replace(config, warmup=warmup,
                          n_iters=warmup + config.steady_window)
        report = theory.predict_report(point)
        curves = run_ensemble(point, cfg)
        theory_msd = (report.msd_cls if cfg.algorithm == CLS
                      else report.msd_rcls)
        theory_msm = (report.msm_cls if cfg.algorithm == CLS
                      else report.msm_rcls)
        rows.append({
            "axis": axis,
            "value": float(value),
            "steady_msd": curves.steady_msd,
            "steady_msm": curves.steady_msm,
            "theory_msd": theory_msd,
            "theory_msm": theory_msm,
            "stderr_msd": curves.stderr_msd,
            "n_trials": cfg.n_trials,
            "seed": cfg.master_seed,
        })
    return rows
