"""Command-line front end: `clse predict|simulate|sweep|verify`.

All commands take a JSON config file (see _CONFIG_SCHEMA below for the
accepted keys). Tabular output is CSV with a header row, comma separators,
'.' decimal point and LF line endings; reports are JSON. dB values are
10*log10 of the linear quantities; an exact zero is reported as the string
"-inf" in dB fields while the linear field keeps the true value.
"""

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import acceptance, montecarlo, theory
from .filters import ALGORITHMS, CLS, DcdParams
from .model import GAUSSIAN, UNIFORM, Scenario, generate_scenario

__all__ = ["main", "load_config", "build_scenario", "build_run_config", "to_db"]

_CONFIG_SCHEMA = {
    "scenario": {"seed", "h", "C", "f", "R", "L", "K", "lambda", "mu", "eta",
                 "input_dist", "consistent_constraints"},
    "run": {"n_trials", "n_iters", "warmup", "steady_window", "master_seed",
            "algorithm", "dcd", "delta", "n_jobs"},
    "sweep": {"axis", "grid"},
    "output": {"directory", "emit_curves"},
    "verify": {"criteria", "scenario_seed", "n_trials", "n_trials_l31",
               "break_tolerance"},
}
_DCD_KEYS = {"H", "M", "N_u"}


class ConfigError(ValueError):
    pass


def to_db(x):
    """10*log10(x), or the string '-inf' for a non-positive input."""
    return 10.0 * math.log10(x) if x > 0.0 else "-inf"


def load_config(path):
    """Parse and validate a JSON config; unknown keys are rejected by name."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    for section, content in cfg.items():
        if section not in _CONFIG_SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(content, dict):
            raise ConfigError(f"section {section!r} must be an object")
        allowed = _CONFIG_SCHEMA[section]
        for key in content:
            if key not in allowed:
                raise ConfigError(f"unknown key {section}.{key}")
        if section == "run" and isinstance(content.get("dcd"), dict):
            for key in content["dcd"]:
                if key not in _DCD_KEYS:
                    raise ConfigError(f"unknown key run.dcd.{key}")
    if "scenario" not in cfg:
        raise ConfigError("config needs a 'scenario' section")
    return cfg


def build_scenario(cfg, seed_override=None):
    sc = cfg["scenario"]
    lam = float(sc.get("lambda", 0.995))
    mu = float(sc.get("mu", 1e3))
    eta = float(sc.get("eta", 0.1))
    dist = sc.get("input_dist", GAUSSIAN)
    if dist not in (GAUSSIAN, UNIFORM):
        raise ConfigError(f"scenario.input_dist must be gaussian|uniform, got {dist!r}")
    if "h" in sc:
        for key in ("C", "f", "R"):
            if key not in sc:
                raise ConfigError(f"explicit scenario needs scenario.{key}")
        return Scenario(h=np.asarray(sc["h"], dtype=float),
                        C=np.asarray(sc["C"], dtype=float),
                        f=np.asarray(sc["f"], dtype=float),
                        R=np.asarray(sc["R"], dtype=float),
                        eta=eta, lam=lam, mu=mu, input_dist=dist,
                        seed=sc.get("seed"))
    seed = seed_override if seed_override is not None else sc.get("seed", 1)
    return generate_scenario(
        seed, int(sc.get("L", 7)), int(sc.get("K", 3)), lam, mu, eta,
        input_dist=dist,
        consistent_constraints=bool(sc.get("consistent_constraints", False)))


def build_run_config(cfg, scenario, serial=False, seed_override=None):
    run = dict(cfg.get("run", {}))
    dcd_cfg = run.pop("dcd", {})
    dcd = DcdParams(H=float(dcd_cfg.get("H", 2.0)),
                    M=int(dcd_cfg.get("M", 15)),
                    Nu=int(dcd_cfg.get("N_u", 8)))
    warmup = int(run.get("warmup", math.ceil(10.0 / (1.0 - scenario.lam))))
    window = int(run.get("steady_window", 1000))
    algorithm = run.get("algorithm", "rcls")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"run.algorithm must be one of {ALGORITHMS}")
    config = montecarlo.RunConfig(
        n_trials=int(run.get("n_trials", 2000)),
        n_iters=int(run.get("n_iters", warmup + window)),
        warmup=warmup,
        steady_window=window,
        master_seed=int(run.get("master_seed", 1)),
        algorithm=algorithm,
        dcd=dcd,
        delta=float(run.get("delta", 1e-2)),
        n_jobs=1 if serial else int(run.get("n_jobs", 1)),
    )
    if seed_override is not None:
        config = replace(config, master_seed=int(seed_override))
    return config


def _out_dir(cfg, args):
    directory = args.out or cfg.get("output", {}).get("directory")
    if directory is None:
        return None
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_predict(cfg, args):
    scenario = build_scenario(cfg, args.seed)
    report = theory.predict_report(scenario)
    payload = report.to_dict()
    payload["msd_rcls_db"] = to_db(report.msd_rcls)
    payload["msm_rcls_db"] = to_db(report.msm_rcls)
    payload["msd_cls_db"] = to_db(report.msd_cls)
    payload["msm_cls_db"] = to_db(report.msm_cls)
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    out = _out_dir(cfg, args)
    if out is not None:
        (out / "prediction.json").write_text(text + "\n")
    return 0


def cmd_simulate(cfg, args):
    scenario = build_scenario(cfg, args.seed)
    config = build_run_config(cfg, scenario, serial=args.serial, seed_override=None)
    report = theory.predict_report(scenario)
    curves = montecarlo.run_ensemble(scenario, config)
    theory_msd = report.msd_cls if config.algorithm == CLS else report.msd_rcls
    theory_msm = report.msm_cls if config.algorithm == CLS else report.msm_rcls

    summary = {
        "algorithm": config.algorithm,
        "n_trials": config.n_trials,
        "n_iters": config.n_iters,
        "master_seed": config.master_seed,
        "steady_msd": curves.steady_msd,
        "steady_msm": curves.steady_msm,
        "steady_msd_db": to_db(curves.steady_msd),
        "steady_msm_db": to_db(curves.steady_msm),
        "stderr_msd": curves.stderr_msd,
        "theory_msd": theory_msd,
        "theory_msm": theory_msm,
        "theory_msd_db": to_db(theory_msd),
        "theory_msm_db": to_db(theory_msm),
        "constraints_satisfied": bool(curves.steady_msm <= 1e-18),
    }
    if isinstance(summary["steady_msd_db"], float) and isinstance(
            summary["theory_msd_db"], float):
        delta = summary["steady_msd_db"] - summary["theory_msd_db"]
        summary["msd_delta_db"] = delta
        print(f"steady MSD: experiment {summary['steady_msd_db']:.3f} dB, "
              f"theory {summary['theory_msd_db']:.3f} dB, delta {delta:+.3f} dB")
    out = _out_dir(cfg, args)
    if out is None:
        raise ConfigError("simulate needs an output directory (--out or output.directory)")
    _write_json(out / "summary.json", summary)
    if cfg.get("output", {}).get("emit_curves", True):
        with open(out / "curves.csv", "w", newline="") as fh:
            fh.write("iteration,msd,msm,mean_updates\n")
            for i in range(config.n_iters):
                # repr of a Python float round-trips exactly
                fh.write(f"{i},{float(curves.msd[i])!r},{float(curves.msm[i])!r},"
                         f"{float(curves.mean_updates[i])!r}\n")
    return 0


def cmd_sweep(cfg, args):
    if "sweep" not in cfg:
        raise ConfigError("sweep command needs a 'sweep' section")
    scenario = build_scenario(cfg, args.seed)
    config = build_run_config(cfg, scenario, serial=args.serial)
    axis = cfg["sweep"].get("axis", "mu")
    grid = [float(v) for v in cfg["sweep"].get("grid", [])]
    rows = montecarlo.sweep(scenario, config, axis, grid)
    out = _out_dir(cfg, args)
    if out is None:
        raise ConfigError("sweep needs an output directory (--out or output.directory)")
    path = out / f"sweep_{axis}.csv"
    with open(path, "w", newline="") as fh:
        fh.write("axis_value,steady_msd_db,steady_msm_db,theory_msd_db,"
                 "theory_msm_db,stderr_db,n_trials,seed\n")
        for row in rows:
            stderr_db = (10.0 / math.log(10.0) * row["stderr_msd"] / row["steady_msd"]
                         if row["steady_msd"] > 0 else "-inf")
            cells = [row["value"], to_db(row["steady_msd"]), to_db(row["steady_msm"]),
                     to_db(row["theory_msd"]), to_db(row["theory_msm"]),
                     stderr_db, row["n_trials"], row["seed"]]
            fh.write(",".join(str(c) for c in cells) + "\n")
    print(f"wrote {path}")
    return 0


def cmd_verify(cfg, args):
    options = acceptance.Options.from_config(cfg.get("verify", {}),
                                             serial=args.serial)
    results = acceptance.run_criteria(options)
    payload = {"criteria": results,
               "all_passed": all(r["passed"] for r in results)}
    out = _out_dir(cfg, args)
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if out is not None:
        (out / "verify.json").write_text(text + "\n")
    return 0 if payload["all_passed"] else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="clse",
        description="Constrained recursive least-squares estimation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in (("predict", cmd_predict), ("simulate", cmd_simulate),
                       ("sweep", cmd_sweep), ("verify", cmd_verify)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--serial", action="store_true",
                       help="force strictly serial execution (bit-exact reruns)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        p.set_defaults(func=func)
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
