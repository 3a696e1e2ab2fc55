"""Acceptance-criteria suite shared by `clse verify` and the test suite.

Each criterion function runs a self-contained experiment at desk scale and
returns a record with the measured value, its threshold, and a pass flag.
Tolerances are fixed here; the only knobs are trial counts (runtime) and
the scenario seed.
"""

import json
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import filters, model, montecarlo, theory
from .filters import CLS, DCD_RCLS, RCLS, DcdParams
from .model import Scenario, generate_scenario
from .montecarlo import RunConfig, run_ensemble

__all__ = ["Options", "run_criteria", "CRITERIA"]

MU_GRID = (1e-1, 1e0, 1e1, 1e2, 1e3, 1e4, 1e6)
ETA_GRID = (0.01, 0.0316, 0.1, 0.316, 1.0)
LAMBDAS = (0.995, 0.999)
ETA_REF = 0.1


@dataclass(frozen=True)
class Options:
    scenario_seed: int = 1
    master_seed: int = 1
    n_trials: int = 2000        # L=7 ensembles
    n_trials_l31: int = 300     # L=31 ensembles (2 dB tolerance)
    criteria: tuple = ()        # empty = all
    break_tolerance: bool = False  # test hook: force one criterion to fail
    serial: bool = True

    @staticmethod
    def from_config(section, serial=True):
        return Options(
            scenario_seed=int(section.get("scenario_seed", 1)),
            n_trials=int(section.get("n_trials", 2000)),
            n_trials_l31=int(section.get("n_trials_l31", 300)),
            criteria=tuple(section.get("criteria", ())),
            break_tolerance=bool(section.get("break_tolerance", False)),
            serial=serial,
        )


def _db(x):
    return 10.0 * math.log10(x)


def _scenario(opts, L=7, K=3, lam=0.995, mu=1e3, eta=ETA_REF, dist=model.GAUSSIAN):
    return generate_scenario(opts.scenario_seed if L == 7 else opts.scenario_seed + 1,
                             L, K, lam, mu, eta, input_dist=dist)


def _config(scenario, opts, algorithm, n_trials=None, **overrides):
    return RunConfig.for_scenario(
        scenario, n_trials=n_trials or opts.n_trials,
        master_seed=opts.master_seed, algorithm=algorithm, **overrides)


def _result(cid, name, measured, threshold, passed, **details):
    rec = {"id": cid, "name": name, "measured": measured,
           "threshold": threshold, "passed": bool(passed)}
    rec.update(details)
    return rec


def criterion_1(opts):
    """rCLS at mu=1e8 tracks CLS per iteration to 1e-5 relative."""
    worst = 0.0
    base = _scenario(opts, mu=1e8)
    for trial in range(20):
        stream = model.DataStream(base, montecarlo.trial_seed(opts.master_seed, trial))
        st_c = filters.state_init(base, 1e-2, CLS)
        st_r = filters.state_init(base, 1e-2, RCLS)
        X, y, _ = stream.take(100)
        for n in range(100):
            filters.covariance_update(st_c, X[n], y[n], base.lam)
            filters.covariance_update(st_r, X[n], y[n], base.lam)
            wc = filters.cls_step(st_c, base)
            wr = filters.rcls_step(st_r, base)
            if n >= base.L:
                worst = max(worst, float(np.linalg.norm(wr - wc)
                                         / np.linalg.norm(wc)))
    return _result("C1", "mu->inf equivalence of rCLS and CLS",
                   worst, 1e-5, worst <= 1e-5)


def criterion_2(opts):
    """CLS fulfills the constraints strictly, per step and in the ensemble."""
    base = _scenario(opts)
    cfg = _config(base, opts, CLS, n_trials=min(opts.n_trials, 500))
    curves = run_ensemble(base, cfg)
    worst_inf = 0.0
    for trial in range(3):
        stream = model.DataStream(base, montecarlo.trial_seed(opts.master_seed, trial))
        state = filters.state_init(base, 1e-2, CLS)
        X, y, _ = stream.take(cfg.n_iters)
        for n in range(cfg.n_iters):
            filters.covariance_update(state, X[n], y[n], base.lam)
            w = filters.cls_step(state, base)
            if n >= base.L:
                worst_inf = max(worst_inf,
                                float(np.max(np.abs(base.C.T @ w - base.f))))
    passed = curves.steady_msm <= 1e-18 and worst_inf <= 1e-9
    return _result("C2", "CLS constraint exactness",
                   max(curves.steady_msm, worst_inf ** 2), 1e-18, passed,
                   steady_msm=curves.steady_msm, worst_inf_norm=worst_inf)


def criterion_3(opts):
    """CLS asymptotic unbiasedness: mean deviation within 4 sigma of zero."""
    base = _scenario(opts)
    curves = run_ensemble(base, _config(base, opts, CLS))
    z = float(np.max(np.abs(curves.mean_dev) / curves.stderr_dev))
    return _result("C3", "CLS asymptotic unbiasedness (z-score)",
                   z, 4.0, z <= 4.0)


def criterion_4(opts):
    """rCLS mean deviation matches A R e within 4 standard errors.

    Known limitation: the closed-form mean deviation replaces the random
    covariance by its mean, leaving a small systematic bias (~0.4% of the
    prediction at mu=10, lam=0.995). The z-score grows as sqrt(n_trials),
    so at the 2000-trial desk scale the mu=10 point measures z ~ 6 and this
    criterion fails honestly; the per-point details quantify the gap.
    """
    worst = 0.0
    points = {}
    for mu in (1e1, 1e3):
        sc = _scenario(opts, mu=mu)
        ctx = model.derive_context(sc)
        predicted = theory.predict_mean_deviation_rcls(ctx, sc)
        curves = run_ensemble(sc, _config(sc, opts, RCLS), g=ctx.g)
        gap = curves.mean_dev - predicted
        z = float(np.max(np.abs(gap) / curves.stderr_dev))
        points[f"mu={mu:g}"] = {
            "max_z": z,
            "max_abs_gap": float(np.max(np.abs(gap))),
            "rel_gap": float(np.max(np.abs(gap)) / np.max(np.abs(predicted))),
        }
        worst = max(worst, z)
    return _result("C4", "rCLS mean deviation vs theory (z-score)",
                   worst, 4.0, worst <= 4.0, points=points,
                   note=("systematic first-order approximation bias in the "
                         "mean-deviation formula; z grows as sqrt(n_trials), "
                         "relative gap ~0.4% at mu=10"))


def _grid_runs(opts, L, K, dist, n_trials):
    """Shared mu-grid ensembles behind criteria 5/6 (and 8)."""
    rows = []
    for lam in LAMBDAS:
        for mu in MU_GRID:
            sc = generate_scenario(opts.scenario_seed if L == 7 else opts.scenario_seed + 1,
                                   L, K, lam, mu, ETA_REF, input_dist=dist)
            rep = theory.predict_report(sc)
            curves = run_ensemble(sc, _config(sc, opts, RCLS, n_trials=n_trials))
            rows.append({
                "lam": lam, "mu": mu,
                "msd_gap_db": _db(curves.steady_msd) - _db(rep.msd_rcls),
                "msm_gap_db": _db(curves.steady_msm) - _db(rep.msm_rcls),
                "steady_msm": curves.steady_msm,
            })
    return rows


def _eta_runs(opts, L, K, dist, n_trials):
    """Shared eta-grid CLS ensembles behind criteria 7 (and 8)."""
    rows = []
    for lam in LAMBDAS:
        for eta in ETA_GRID:
            sc = generate_scenario(opts.scenario_seed if L == 7 else opts.scenario_seed + 1,
                                   L, K, lam, 1e10, eta, input_dist=dist)
            ctx = model.derive_context(sc)
            msd_cls = theory.predict_msd_cls(ctx, sc)
            msd_rcls_lim = theory.predict_msd_rcls(ctx, sc)
            curves = run_ensemble(sc, _config(sc, opts, CLS, n_trials=n_trials),
                                  g=ctx.g)
            rows.append({
                "lam": lam, "eta": eta,
                "msd_gap_db": _db(curves.steady_msd) - _db(msd_cls),
                "limit_rel": abs(msd_rcls_lim - msd_cls) / msd_cls,
            })
    return rows


_CACHE = {}  # shared ensembles reused across criteria within one process


def criterion_5(opts):
    rows = _CACHE.setdefault(("l7", opts), _grid_runs(opts, 7, 3, model.GAUSSIAN,
                                                      opts.n_trials))
    worst = max(abs(r["msd_gap_db"]) for r in rows)
    return _result("C5", "rCLS steady-state MSD vs theory (dB gap, mu grid)",
                   worst, 1.0, worst <= 1.0, rows=rows)


def criterion_6(opts):
    rows = _CACHE.setdefault(("l7", opts), _grid_runs(opts, 7, 3, model.GAUSSIAN,
                                                      opts.n_trials))
    worst = max(abs(r["msm_gap_db"]) for r in rows)
    collapse = min(
        _db(next(r["steady_msm"] for r in rows if r["lam"] == lam and r["mu"] == 1e-1)
            / next(r["steady_msm"] for r in rows if r["lam"] == lam and r["mu"] == 1e6))
        for lam in LAMBDAS)
    passed = worst <= 1.0 and collapse >= 20.0
    return _result("C6", "rCLS steady-state MSM vs theory and MSM collapse",
                   worst, 1.0, passed, collapse_db=collapse)


def criterion_7(opts):
    rows = _CACHE.setdefault(("l7eta", opts), _eta_runs(opts, 7, 3, model.GAUSSIAN,
                                                        opts.n_trials))
    worst = max(abs(r["msd_gap_db"]) for r in rows)
    worst_rel = max(r["limit_rel"] for r in rows)
    passed = worst <= 1.0 and worst_rel <= 1e-3
    return _result("C7", "CLS steady-state MSD vs theory (eta grid)",
                   worst, 1.0, passed, large_mu_rel_gap=worst_rel, rows=rows)


def criterion_8(opts):
    grid = _grid_runs(opts, 31, 15, model.UNIFORM, opts.n_trials_l31)
    eta = _eta_runs(opts, 31, 15, model.UNIFORM, opts.n_trials_l31)
    worst = max(max(abs(r["msd_gap_db"]) for r in grid),
                max(abs(r["msm_gap_db"]) for r in grid),
                max(abs(r["msd_gap_db"]) for r in eta))
    return _result("C8", "L=31 uniform-input scenario (dB gap, 2 dB tol)",
                   worst, 2.0, worst <= 2.0,
                   measured_gap_report={"mu_grid": grid, "eta_grid": eta})


def criterion_9(opts):
    """Stability implications and the analytic lower bound on lambda."""
    rng = np.random.default_rng(opts.scenario_seed)
    implication_ok = True
    bounds_ok = True
    worst_rho = 0.0
    for i in range(50):
        lam = float(rng.uniform(0.9, 0.999))
        mu = float(10.0 ** rng.uniform(-1, 5))
        sc = generate_scenario(1000 + i, 7, 3, lam, mu, ETA_REF)
        rep = theory.predict_report(sc)
        if not (0.0 < rep.lambda_lower_bound_cls < 1.0):
            bounds_ok = False
        if rep.stability_lhs_rcls < 2.0:
            worst_rho = max(worst_rho, rep.rho_S)
            if rep.rho_S >= 1.0:
                implication_ok = False
    # analytic case: R = I, L=7, K=3 -> bound = 5/7
    base = _scenario(opts)
    eye_sc = Scenario(h=base.h, C=base.C, f=base.f, R=np.eye(7),
                      eta=ETA_REF, lam=0.995, mu=1e3)
    ctx = model.derive_context(eye_sc)
    bound = theory.lambda_lower_bound_cls(ctx, eye_sc)
    analytic_gap = abs(bound - 5.0 / 7.0)
    passed = implication_ok and bounds_ok and analytic_gap <= 1e-9
    return _result("C9", "stability bound consistency",
                   analytic_gap, 1e-9, passed,
                   implication_ok=implication_ok, worst_rho_S=worst_rho)


def criterion_10(opts):
    """DCD-rCLS fidelity: ensemble MSD and exact-mode solver agreement."""
    sc = _scenario(opts, mu=1e3)
    cr = run_ensemble(sc, _config(sc, opts, RCLS))
    cd = run_ensemble(sc, _config(sc, opts, DCD_RCLS))
    msd_gap = abs(_db(cd.steady_msd) - _db(cr.steady_msd))

    # exact-mode agreement at moderate weight, after the warm-up transient
    sc10 = _scenario(opts, mu=1e1)
    params = DcdParams(H=2.0, M=30, Nu=1000)
    st_r = filters.state_init(sc10, 1e-2, RCLS)
    st_d = filters.state_init(sc10, 1e-2, DCD_RCLS)
    stream = model.DataStream(sc10, montecarlo.trial_seed(opts.master_seed, 0))
    n_iters, warm = 1200, 1000
    X, y, _ = stream.take(n_iters)
    worst_step = 0.0
    for n in range(n_iters):
        filters.covariance_update(st_r, X[n], y[n], sc10.lam)
        filters.covariance_update(st_d, X[n], y[n], sc10.lam)
        wr = filters.rcls_step(st_r, sc10)
        wd = filters.dcd_rcls_step(st_d, sc10, params)
        if n >= warm:
            worst_step = max(worst_step, float(np.max(np.abs(wr - wd))))
    passed = msd_gap <= 0.5 and worst_step <= 1e-6
    return _result("C10", "DCD-rCLS fidelity",
                   msd_gap, 0.5, passed, exact_mode_gap=worst_step)


def criterion_11(opts):
    """Byte-identical rerun of `clse simulate --serial`."""
    from . import cli
    config = {
        "scenario": {"seed": opts.scenario_seed, "L": 7, "K": 3,
                     "lambda": 0.995, "mu": 1000.0, "eta": 0.1},
        "run": {"n_trials": 8, "n_iters": 300, "warmup": 200,
                "steady_window": 100, "master_seed": opts.master_seed},
    }
    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = os.path.join(tmp, "config.json")
        with open(cfg_path, "w") as fh:
            json.dump(config, fh)
        outs = []
        for run_dir in ("a", "b"):
            out = os.path.join(tmp, run_dir)
            rc = cli.main(["simulate", "--config", cfg_path,
                           "--out", out, "--serial"])
            assert rc == 0
            blobs = {}
            for name in sorted(os.listdir(out)):
                with open(os.path.join(out, name), "rb") as fh:
                    blobs[name] = fh.read()
            outs.append(blobs)
        identical = outs[0] == outs[1] and len(outs[0]) >= 2
    return _result("C11", "deterministic reruns (byte-identical outputs)",
                   0.0 if identical else 1.0, 0.0, identical)


CRITERIA = {
    "C1": criterion_1, "C2": criterion_2, "C3": criterion_3,
    "C4": criterion_4, "C5": criterion_5, "C6": criterion_6,
    "C7": criterion_7, "C8": criterion_8, "C9": criterion_9,
    "C10": criterion_10, "C11": criterion_11,
}


def run_criteria(opts):
    """Run the selected (default all) criteria; one record each."""
    wanted = opts.criteria or tuple(CRITERIA)
    results = []
    for cid in wanted:
        if cid not in CRITERIA:
            raise ValueError(f"unknown criterion {cid!r}")
        rec = CRITERIA[cid](opts)
        if opts.break_tolerance and cid == wanted[-1]:
            rec = dict(rec, threshold=-1.0, passed=False,
                       note="tolerance deliberately broken (test hook)")
        status = "PASS" if rec["passed"] else "FAIL"
        print(f"[{status}] {rec['id']}: {rec['name']} "
              f"(measured {rec['measured']:.3g}, threshold {rec['threshold']:.3g})")
        results.append(rec)
    return results
