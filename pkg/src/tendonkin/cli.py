"""Command-line front end wiring the pipeline end to end.

Subcommands: gen-data, traj, train, eval, report, run, lemniscate.
Exit codes: 0 success, 1 config error, 2 numerical failure, 3 assertion
failure (run --assert).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiment as ex
from .dataset import generate_dataset, read_csv, subsample, write_csv
from .gp import GpError
from .hybrid import VariantKind, WeightConfig, load_bundle, save_bundle, train_variant
from .hybrid import predict_data_driven_batch
from .kinematics import MotorState, analytical_model, load_chain, wrong_analytical_chain
from .metrics import max_abs_error, rmse
from .trajectories import (
    InfeasibleTrajectoryError,
    LemniscatePath,
    fit_chirp_amplitudes,
    motion_combinations,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_ASSERT = 3


def _load_config(args) -> ex.ExperimentConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = ex.ExperimentConfig.from_json(fh.read())
    else:
        cfg = ex.ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _chirps_for(cfg, chain):
    masks = motion_combinations(chain.n_motors)
    return [
        fit_chirp_amplitudes(
            chain, mask, seed=cfg.seed * 10007 + i,
            omega_min=cfg.omega_min, omega_max=cfg.omega_max,
        )
        for i, mask in enumerate(masks)
    ]


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    chain = load_chain(cfg.chain_path)
    ds = generate_dataset(chain, _chirps_for(cfg, chain), cfg.dt, cfg.noise_sigma, cfg.seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "dataset.csv")
    write_csv(ds, path)
    print(f"wrote {len(ds)} samples to {path}")
    return EXIT_OK


def cmd_traj(args) -> int:
    cfg = _load_config(args)
    chain = load_chain(cfg.chain_path)
    mask = [int(c) for c in args.mask] if args.mask else [1] * chain.n_motors
    params = fit_chirp_amplitudes(
        chain, mask, seed=cfg.seed, omega_min=cfg.omega_min, omega_max=cfg.omega_max
    )
    from .trajectories import chirp_eval_all

    t = np.arange(0.0, params.T + 0.5 * cfg.dt, cfg.dt)
    t = t[t <= params.T]
    th, dth, ddth = chirp_eval_all(params, t)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "trajectory.csv")
    n = chain.n_motors
    header = (
        ["t"]
        + [f"theta_{i+1}" for i in range(n)]
        + [f"thetadot_{i+1}" for i in range(n)]
        + [f"thetaddot_{i+1}" for i in range(n)]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(t.shape[0]):
            row = [repr(float(t[k]))]
            for arr in (th, dth, ddth):
                row += [repr(float(v)) for v in arr[k]]
            fh.write(",".join(row) + "\n")
    print(f"wrote {t.shape[0]} samples to {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_config(args)
    chain = load_chain(cfg.chain_path)
    ana = chain if cfg.analytical == "correct" else wrong_analytical_chain(
        chain, cfg.wrong_length_scale
    )
    ds = generate_dataset(chain, _chirps_for(cfg, chain), cfg.dt, cfg.noise_sigma, cfg.seed)
    train = subsample(ds, cfg.n_train, seed=cfg.seed + 1)
    kind = VariantKind(args.variant)
    model = train_variant(
        kind, train, ana, restarts=cfg.restarts, seed=cfg.seed + 100,
        maxiter=cfg.maxiter, hyperopt_n=cfg.n_hyperopt,
    )
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"model_{kind.value}.json")
    save_bundle(model, path, thresholds=WeightConfig(np.asarray(cfg.thresholds)))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model, _ = load_bundle(args.model)
    ds = read_csv(args.data)
    P, _ = predict_data_driven_batch(model, ds.states_flat())
    ref = ds.p_true if ds.p_true is not None else ds.p_meas
    out = {
        "rmse": [float(v) for v in rmse(P, ref)],
        "max_abs_error": [float(v) for v in max_abs_error(P, ref)],
        "reference": "ground_truth" if ds.p_true is not None else "measured",
    }
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_report(args) -> int:
    with open(os.path.join(args.out, "report.json"), "r", encoding="utf-8") as fh:
        report = json.load(fh)
    text = ex._report_md(report)
    path = os.path.join(args.out, "report.md")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load_config(args)
    ex.run_experiment(cfg, args.out, do_assert=args.do_assert)
    print(f"report written to {os.path.join(args.out, 'report.json')}")
    return EXIT_OK


def cmd_lemniscate(args) -> int:
    cfg = _load_config(args)
    chain = load_chain(cfg.chain_path)
    path_spec = LemniscatePath(T=args.duration)
    t, theta = ex.lemniscate_to_motors(chain, path_spec, cfg.dt)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "lemniscate_motors.csv")
    n = chain.n_motors
    z = np.zeros(n)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(
            ",".join(
                ["t"] + [f"theta_{i+1}" for i in range(n)] + ["x", "y", "z"]
            )
            + "\n"
        )
        for k in range(t.shape[0]):
            p = analytical_model(chain, MotorState(theta[k], z, z, z, z))
            row = [repr(float(t[k]))]
            row += [repr(float(v)) for v in theta[k]]
            row += [repr(float(v)) for v in p]
            fh.write(",".join(row) + "\n")
    print(f"wrote {t.shape[0]} samples to {out_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tendonkin",
        description="Hybrid analytical/GP forward-kinematic modeling pipeline",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="experiment config JSON")
        sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument("--out", default="out", help="output directory")

    sp = sub.add_parser("gen-data", help="generate a simulated dataset CSV")
    common(sp)
    sp.set_defaults(fn=cmd_gen_data)

    sp = sub.add_parser("traj", help="emit a sampled excitation trajectory CSV")
    common(sp)
    sp.add_argument("--mask", help="binary motor mask, e.g. 1011")
    sp.set_defaults(fn=cmd_traj)

    sp = sub.add_parser("train", help="train one variant and save its bundle")
    common(sp)
    sp.add_argument(
        "--variant",
        default="error_learning",
        choices=[k.value for k in VariantKind],
    )
    sp.set_defaults(fn=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a saved model bundle on a dataset CSV")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("report", help="re-render report.md from report.json")
    sp.add_argument("--out", default="out")
    sp.set_defaults(fn=cmd_report)

    sp = sub.add_parser("run", help="full pipeline: data, training, evaluation, report")
    common(sp)
    sp.add_argument(
        "--assert", dest="do_assert", action="store_true",
        help="fail (exit 3) if the report violates the ordering checks",
    )
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("lemniscate", help="figure-eight tracking motor commands")
    common(sp)
    sp.add_argument("--duration", type=float, default=6.0, help="path duration (s)")
    sp.set_defaults(fn=cmd_lemniscate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (FileNotFoundError, ValueError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ex.AcceptanceAssertionError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (ex.StageError, ex.TrackingInfeasibleError, GpError, InfeasibleTrajectoryError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
