"""Command-line entry point.

Subcommands: audit-kernel, simulate, moments, seminorm, run, emit-plots.
Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 configuration
error, 3 numerical failure.  The default seed comes from HOLDERLAB_SEED
when --seed is absent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .campanato import campanato_from_pair_moments, ParabolicCylinder, SpaceTimePoint
from .convolution import FieldEnsemble, TestFunctionSpec, convolve_brownian, convolve_poisson
from .errors import ConfigError, HolderLabError
from .experiments import (
    ExperimentConfig,
    default_config,
    emit_plot_data,
    load_config,
    run_experiment,
)
from .kernels import KernelSpec, SpectralGrid
from .moments import estimate_pair_moments, sample_pairs_dyadic, sample_pairs_within_cylinder
from .noise import JumpSpec, MarkLaw, NoiseSpec

EXIT_PASS = 0
EXIT_VERDICT_FAIL = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SEED_ENV = "HOLDERLAB_SEED"


def _apply_threads(n):
    if n is None:
        return
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        print("warning: threadpoolctl not installed; --threads ignored",
              file=sys.stderr)


def _resolve_seed(args) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    return int(env) if env else None


def _config_from_args(args, preset=None) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        if preset is not None and cfg.experiment != preset:
            raise ConfigError(
                f"config requests {cfg.experiment!r} but the subcommand "
                f"runs {preset!r}")
    else:
        cfg = default_config(preset or args.preset)
    seed = _resolve_seed(args)
    if seed is not None:
        cfg.seed = seed
    if args.out:
        cfg.out = args.out
    return cfg


def _print_verdicts(report):
    for v in report.verdicts:
        status = "PASS" if v.passed else "FAIL"
        pieces = [f"[{status}] {v.claim}"]
        if v.predicted is not None:
            pieces.append(f"predicted={v.predicted:.4g}")
        if v.fitted is not None:
            pieces.append(f"fitted={v.fitted:.4g}")
        if v.tolerance is not None:
            pieces.append(f"tol={v.tolerance:g}")
        print("  ".join(pieces))
    print(f"experiment {report.experiment}: "
          f"{'PASS' if report.passed else 'FAIL'}")


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    report = run_experiment(cfg)
    _print_verdicts(report)
    if cfg.out:
        print(f"report written to {cfg.out}")
    return EXIT_PASS if report.passed else EXIT_VERDICT_FAIL


def _cmd_audit_kernel(args) -> int:
    cfg = _config_from_args(args, preset="kernel-audit")
    report = run_experiment(cfg)
    _print_verdicts(report)
    return EXIT_PASS if report.passed else EXIT_VERDICT_FAIL


def _build_sim_pieces(cfg: ExperimentConfig, kind: str):
    sim = cfg.simulation
    kernel = KernelSpec(alpha=cfg.kernel.alpha, epsilon=cfg.kernel.epsilon, dim=1)
    grid = SpectralGrid(length=sim.grid_length, points=sim.grid_points, dim=1)
    if kind == "brownian":
        noise = NoiseSpec(kind="brownian", horizon=sim.horizon, steps=sim.steps,
                          seed=cfg.seed)
    else:
        noise = NoiseSpec(kind="poisson", horizon=sim.horizon, steps=sim.steps,
                          seed=cfg.seed,
                          jump=JumpSpec(intensity=cfg.noise.intensity,
                                        mark=MarkLaw(cfg.noise.mark_family,
                                                     cfg.noise.mark_parameter)))
    g = TestFunctionSpec(family="parabolic-power", beta=cfg.moments.beta,
                         amplitude=cfg.moments.amplitude, mark_family="identity")
    return kernel, grid, noise, g


def _cmd_simulate(args) -> int:
    cfg = _config_from_args(args, preset=args.kind_preset)
    kind = "brownian" if cfg.experiment == "brownian-regularity" else "poisson"
    kernel, grid, noise, g = _build_sim_pieces(cfg, kind)
    import numpy as np

    lags = [2.0**-k for k in range(cfg.moments.lag_k_min, cfg.moments.lag_k_max + 1)]
    lag_steps = [max(1, round(lag * lag / noise.dt)) for lag in lags]
    from .experiments import _regularity_saved_indices

    saved = _regularity_saved_indices(cfg.simulation.steps, lag_steps)
    dtype = np.float32 if cfg.simulation.store_dtype == "float32" else np.float64
    convolve = convolve_brownian if kind == "brownian" else convolve_poisson
    ens = convolve(kernel, grid, g, noise, M=cfg.simulation.ensemble,
                   save_times=saved, dtype=dtype)
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    prefix = str(out / "ensemble")
    ens.save(prefix)
    print(f"ensemble written to {prefix}.bin / {prefix}.json")
    return EXIT_PASS


def _cmd_moments(args) -> int:
    ens = FieldEnsemble.load(args.ensemble)
    lags = [2.0**-k for k in range(args.lag_k_min, args.lag_k_max + 1)]
    seed = _resolve_seed(args) or 0
    pairs = sample_pairs_dyadic(ens, lags, args.pairs, seed=seed)
    field = estimate_pair_moments(ens, pairs, args.p)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    field.write_csv(out / "moments.csv")
    field.write_json(out / "moments.json")
    print(f"moment field written to {out / 'moments.csv'}")
    return EXIT_PASS


def _cmd_seminorm(args) -> int:
    ens = FieldEnsemble.load(args.ensemble)
    seed = _resolve_seed(args) or 0
    p = args.p
    theta = args.theta
    groups = []
    times = ens.times
    t_mid = float(times[len(times) // 2])
    for k in range(args.scale_k_min, args.scale_k_max + 1):
        c = 2.0**-k
        cyl = ParabolicCylinder(SpaceTimePoint(t_mid, [0.0] * ens.grid.dim), c)
        try:
            pairs = sample_pairs_within_cylinder(ens, cyl, args.pairs, seed=seed + k)
        except HolderLabError:
            continue
        field = estimate_pair_moments(ens, pairs, p)
        groups.append((c, cyl.measure, float(field.estimates.mean())))
    report = campanato_from_pair_moments(groups, p, theta)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "seminorm.json")
    report.write_csv(out / "seminorm.csv")
    print(f"seminorm report written to {out / 'seminorm.json'}")
    return EXIT_PASS


def _cmd_emit_plots(args) -> int:
    with open(args.report) as fh:
        data = json.load(fh)
    from .experiments import ExperimentReport, Verdict

    report = ExperimentReport(
        experiment=data["experiment"], config=data["config"],
        verdicts=[Verdict(**v) for v in data["verdicts"]],
        modules=data["modules"], seed=data["rng"]["seed"],
        version=data.get("version", ""),
    )
    written = emit_plot_data(report, args.out or "plots")
    print(f"{len(written)} plot files written")
    return EXIT_PASS


def _add_common(sub, with_config=True):
    if with_config:
        sub.add_argument("--config", help="JSON experiment configuration")
    sub.add_argument("--seed", type=int, default=None,
                     help=f"RNG seed (default: ${SEED_ENV} or config)")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--threads", type=int, default=None,
                     help="cap BLAS/FFT worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holderlab",
        description="Moment-regularity laboratory for stochastic heat-type "
                    "convolutions")
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run a full experiment preset")
    run.add_argument("--preset", default="kernel-audit",
                     help="preset name when no --config is given")
    _add_common(run)
    run.set_defaults(func=_cmd_run)

    audit = subs.add_parser("audit-kernel", help="kernel condition audit")
    _add_common(audit)
    audit.set_defaults(func=_cmd_audit_kernel)

    simulate = subs.add_parser("simulate", help="generate and persist an ensemble")
    simulate.add_argument("--kind-preset", default="brownian-regularity",
                          choices=["brownian-regularity", "poisson-regularity"])
    _add_common(simulate)
    simulate.set_defaults(func=_cmd_simulate)

    moments = subs.add_parser("moments", help="pair moments of a stored ensemble")
    moments.add_argument("--ensemble", required=True,
                         help="path prefix of ensemble.bin/.json")
    moments.add_argument("--p", type=float, default=2.0)
    moments.add_argument("--lag-k-min", type=int, default=1)
    moments.add_argument("--lag-k-max", type=int, default=5)
    moments.add_argument("--pairs", type=int, default=256)
    _add_common(moments, with_config=False)
    moments.set_defaults(func=_cmd_moments)

    seminorm = subs.add_parser("seminorm", help="Campanato scaling of a stored ensemble")
    seminorm.add_argument("--ensemble", required=True)
    seminorm.add_argument("--p", type=float, default=2.0)
    seminorm.add_argument("--theta", type=float, default=4.0 / 3.0)
    seminorm.add_argument("--scale-k-min", type=int, default=2)
    seminorm.add_argument("--scale-k-max", type=int, default=5)
    seminorm.add_argument("--pairs", type=int, default=256)
    _add_common(seminorm, with_config=False)
    seminorm.set_defaults(func=_cmd_seminorm)

    plots = subs.add_parser("emit-plots", help="CSV plot bundle from a report")
    plots.add_argument("--report", required=True, help="path to report.json")
    _add_common(plots, with_config=False)
    plots.set_defaults(func=_cmd_emit_plots)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_threads(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HolderLabError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
