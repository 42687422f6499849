"""Command-line entry point.

Subcommands map onto the library one-to-one: simulate, lyapunov, bound,
sync, pullback, concentration, compare, selftest.  Exit codes: 0 success,
1 usage or configuration error, 2 numerical failure, 3 failed selftest.

Seed precedence: --seed beats the config file's `seed`, which beats the
LYAPSYNC_SEED environment variable, which beats the default 0.
"""

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ResolvedConfig, emit_config, parse_config
from .errors import (ConfigError, InsufficientBatchesError, KappaTooSmallError,
                     LyapsyncError, NoConvergenceError, NonFiniteError)
from .experiments import (ExperimentPlan, run_bound_comparison,
                          run_concentration, run_pullback, run_sync,
                          sample_initial_fields)
from .field import Field
from .integrator import NoiseStream, SimConfig, simulate
from .lyapunov import CSV_HEADER as LYAP_HEADER
from .lyapunov import top_lyapunov
from .output import Manifest, plot_series, write_csv
from .potentials import NONDEGENERATE, make_potential
from .selftest import run_selftest
from .theory import bound_report

USAGE_ERROR = 1
NUMERICAL_ERROR = 2
SELFTEST_ERROR = 3

TRAJECTORY_HEADER = ("time", "l2_norm", "sup_norm", "bulk_potential",
                     "dist_to_minima")
SYNC_SUMMARY_HEADER = ("seed", "kappa", "epsilon", "clock", "initial_diameter",
                       "final_diameter", "fitted_rate", "fit_residual",
                       "floored", "lambda_top", "lambda_stderr")
PULLBACK_HEADER = ("seed", "kappa", "epsilon", "start_time", "diameter_at_zero")
CONCENTRATION_HEADER_BASE = ("epsilon", "fraction_within_delta")
COMPARE_HEADER = ("kappa", "epsilon", "clock", "lambda_top", "stderr",
                  "ergodic_lambda_plus", "ergodic_stderr", "analytic_bound",
                  "ordering_ok")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_ERROR)


def _build_parser():
    parser = _Parser(prog="lyapsync", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("simulate", "integrate one trajectory and write its summary CSV"),
        ("lyapunov", "estimate the top Lyapunov exponent"),
        ("bound", "evaluate the analytic concentration weights and rate bounds"),
        ("sync", "shared-noise contraction experiment"),
        ("pullback", "diameter at time zero from increasingly early starts"),
        ("concentration", "time fraction near the minima set per noise level"),
        ("compare", "joint exponent estimate, ergodic bound, analytic bound"),
        ("selftest", "run the built-in invariant suite"),
    ):
        command = sub.add_parser(name, help=doc)
        command.add_argument("--config", default=None, help="path to key=value config")
        command.add_argument("--seed", type=int, default=None,
                             help="master seed (overrides config and environment)")
        command.add_argument("--out", default="lyapsync-out", help="output directory")
        command.add_argument("--workers", type=int, default=0,
                             help="parallel workers for sweeps (0 = all cores)")
        command.add_argument("--plots", action="store_true",
                             help="emit SVG plots next to each CSV")
    return parser


def _resolve(args):
    env_seed = os.environ.get("LYAPSYNC_SEED")
    default_seed = int(env_seed) if env_seed is not None else None
    if args.config is not None and not os.path.exists(args.config):
        raise ConfigError(f"config file not found: {args.config}")
    source = args.config if args.config is not None else ""
    resolved = parse_config(source, default_seed=default_seed)
    if args.seed is not None:
        entries = dict(resolved.items())
        entries["seed"] = int(args.seed)
        resolved = ResolvedConfig(entries)
    return resolved


def _potential_from(resolved):
    return make_potential(resolved.potential_name, **resolved.potential_params)


def _sim_config(resolved, potential):
    return SimConfig(potential, kappa=resolved.sim_kappa,
                     epsilon=resolved.sim_epsilon, grid_size=resolved.grid_N,
                     dt=resolved.sim_dt, t_final=resolved.sim_T,
                     scheme=resolved.sim_scheme, rescaled=resolved.sim_rescaled,
                     seed=resolved.seed, dealias=resolved.sim_dealias)


def _initial_field(resolved, potential, cfg):
    kind = resolved.init_kind
    if kind == "zero":
        return Field.zero(potential.n, cfg.grid_size)
    if kind == "ball":
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 9999]))
        return sample_initial_fields(potential, cfg.grid_size, 1,
                                     resolved.init_radius, rng)[0]
    if potential.kind == NONDEGENERATE:
        if not potential.minima:
            return Field.zero(potential.n, cfg.grid_size)
        return Field.constant(potential.minima[0].location, cfg.grid_size)
    anchor = np.concatenate([[potential.radii[0]], np.zeros(potential.n - 1)])
    return Field.constant(anchor, cfg.grid_size)


def _plan(resolved, cfg, workers):
    seeds = tuple(resolved.seed + i for i in range(resolved.sweep_seeds))
    return ExperimentPlan(
        "cli", cfg, kappas=resolved.sweep_kappa or None,
        epsilons=resolved.sweep_epsilon or None, seeds=seeds,
        k_points=resolved.experiment_k_points, radius=resolved.experiment_radius,
        pullback_starts=resolved.experiment_pullback_starts,
        delta=resolved.experiment_delta, burn_in=resolved.lyap_burn_in,
        renorm_every=resolved.lyap_renorm_every, batches=resolved.lyap_batches,
        workers=workers)


def _workers(args):
    return args.workers if args.workers and args.workers > 0 else (os.cpu_count() or 1)


def _cmd_simulate(args, resolved, manifest):
    potential = _potential_from(resolved)
    cfg = _sim_config(resolved, potential)
    start = time.perf_counter()
    trajectory = simulate(_initial_field(resolved, potential, cfg), cfg,
                          noise=NoiseStream(cfg.seed, 0, potential.n, cfg.grid_size))
    path = manifest.out_dir / "trajectory.csv"
    write_csv(path, TRAJECTORY_HEADER, trajectory.summary_rows())
    files = [path]
    if args.plots:
        files.append(plot_series(manifest.out_dir / "trajectory.svg",
                                 trajectory.times,
                                 [trajectory.l2, trajectory.sup],
                                 ["l2_norm", "sup_norm"], "trajectory norms",
                                 f"time ({trajectory.clock})", "norm"))
    manifest.add_run("simulate", 0, files, time.perf_counter() - start)
    return 0


def _cmd_lyapunov(args, resolved, manifest):
    potential = _potential_from(resolved)
    cfg = _sim_config(resolved, potential)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    h0 = Field(rng.standard_normal((potential.n, cfg.grid_size)))
    start = time.perf_counter()
    report = top_lyapunov(cfg, _initial_field(resolved, potential, cfg), h0,
                          renorm_every=resolved.lyap_renorm_every,
                          burn_in=resolved.lyap_burn_in,
                          batches=resolved.lyap_batches,
                          noise=NoiseStream(cfg.seed, 0, potential.n, cfg.grid_size))
    path = manifest.out_dir / "lyapunov.csv"
    write_csv(path, LYAP_HEADER, [report.csv_row()])
    manifest.add_run("lyapunov", 0, [path], time.perf_counter() - start)
    print(f"lambda_top = {report.lambda_top:.6g} +- {report.stderr:.2g} "
          f"({report.clock} clock), ergodic lambda_plus average = "
          f"{report.ergodic_lambda_plus:.6g}")
    if report.clock == "rescaled":
        print(f"physical-clock equivalent: {report.lambda_top_physical:.6g}")
    return 0


def _cmd_bound(args, resolved, manifest):
    potential = _potential_from(resolved)
    start = time.perf_counter()
    report = bound_report(potential, resolved.sim_kappa,
                          c_star=resolved.theory_c_star,
                          m_trunc=resolved.theory_m_trunc,
                          kappa_rule=resolved.theory_kappa_rule)
    rows = []
    lines = [f"potential {report.potential_name} (n={report.n}), "
             f"kappa={report.kappa:g}, c_star={report.c_star:g}"]
    header = f"{'minimum':>12} {'theta':>14} {'weight':>12} {'rate_term':>12}"
    lines.append(header)
    for label, theta, weight, rate in zip(report.table.labels, report.table.thetas,
                                          report.table.weights, report.rate_terms):
        lines.append(f"{label:>12} {theta:>14.8g} {weight:>12.8g} {rate:>12.8g}")
        rows.append((label, theta, weight, rate))
    if report.bound_point is not None:
        lines.append(f"rate bound (eta=0): {report.bound_point:+.6g}")
        summary = ("point", report.bound_point, "", "", "")
    elif report.bound_sphere is not None:
        bound = report.bound_sphere
        lines.append(f"main={bound.main_term:+.3f}, error={bound.error_term:+.3f}, "
                     f"total={bound.total:+.3f} "
                     f"(c_max={bound.c_max:g}, kappa_min={bound.kappa_min:g}, "
                     f"remainder {bound.remainder_note})")
        summary = ("sphere", bound.main_term, bound.error_term, bound.total,
                   bound.intro_display_main)
    else:
        lines.append(f"kappa={report.kappa:g} below kappa_min={report.kappa_min:g}: "
                     "sphere bound not evaluated")
        summary = ("sphere", "", "", "", "")
    print("\n".join(lines))
    path = manifest.out_dir / "bound.csv"
    write_csv(path, ("label", "theta", "weight", "rate_term", "kind",
                     "main_term", "error_term", "total", "intro_display"),
              [(label, theta, weight, rate) + summary
               for (label, theta, weight, rate) in rows])
    manifest.add_run("bound", 0, [path], time.perf_counter() - start)
    return 0


def _cmd_sync(args, resolved, manifest):
    potential = _potential_from(resolved)
    cfg = _sim_config(resolved, potential)
    plan = _plan(resolved, cfg, _workers(args))
    start = time.perf_counter()
    reports = run_sync(plan)
    files = []
    summary_rows = []
    for index, report in enumerate(reports):
        pair_header = ["time", "diameter"] + [f"d_{i}_{j}" for i, j in report.pair_labels]
        series_path = manifest.out_dir / f"sync_series_{index:03d}.csv"
        rows = [(t, report.diameters[k]) + tuple(report.pair_distances[k])
                for k, t in enumerate(report.times)]
        write_csv(series_path, pair_header, rows)
        files.append(series_path)
        if args.plots:
            files.append(plot_series(manifest.out_dir / f"sync_series_{index:03d}.svg",
                                     report.times, [report.diameters], ["diameter"],
                                     "shared-noise diameter",
                                     f"time ({report.clock})", "L2 diameter",
                                     logy=True))
        summary_rows.append((report.seed, report.kappa, report.epsilon,
                             report.clock, report.initial_diameter,
                             report.final_diameter, report.fitted_rate,
                             report.fit_residual, report.floored,
                             report.lambda_top, report.lambda_stderr))
    summary_path = manifest.out_dir / "sync_summary.csv"
    write_csv(summary_path, SYNC_SUMMARY_HEADER, summary_rows)
    files.append(summary_path)
    manifest.add_run("sync", 0, files, time.perf_counter() - start)
    return 0


def _cmd_pullback(args, resolved, manifest):
    potential = _potential_from(resolved)
    cfg = _sim_config(resolved, potential)
    plan = _plan(resolved, cfg, _workers(args))
    start = time.perf_counter()
    reports = run_pullback(plan)
    rows = []
    for report in reports:
        for start_time, diameter in zip(report.start_times, report.diameters_at_zero):
            rows.append((report.seed, report.kappa, report.epsilon, start_time,
                         diameter))
    path = manifest.out_dir / "pullback.csv"
    write_csv(path, PULLBACK_HEADER, rows)
    manifest.add_run("pullback", 0, [path], time.perf_counter() - start)
    return 0


def _cmd_concentration(args, resolved, manifest):
    potential = _potential_from(resolved)
    cfg = _sim_config(resolved, potential)
    plan = _plan(resolved, cfg, _workers(args))
    start = time.perf_counter()
    rows = run_concentration(plan)
    n_bins = len(rows[0].occupations) if rows else 0
    header = CONCENTRATION_HEADER_BASE + tuple(f"occupation_{i}" for i in range(n_bins))
    path = manifest.out_dir / "concentration.csv"
    write_csv(path, header,
              [(row.epsilon, row.fraction) + row.occupations for row in rows])
    manifest.add_run("concentration", 0, [path], time.perf_counter() - start)
    return 0


def _cmd_compare(args, resolved, manifest):
    potential = _potential_from(resolved)
    cfg = _sim_config(resolved, potential)
    plan = _plan(resolved, cfg, _workers(args))
    start = time.perf_counter()
    rows = run_bound_comparison(plan)
    path = manifest.out_dir / "compare.csv"
    write_csv(path, COMPARE_HEADER,
              [(r.kappa, r.epsilon, r.clock, r.lambda_top, r.stderr,
                r.ergodic_lambda_plus, r.ergodic_stderr, r.analytic_bound,
                r.ordering_ok) for r in rows])
    files = [path]
    if args.plots and len(rows) > 1:
        epsilons = [r.epsilon for r in rows]
        files.append(plot_series(manifest.out_dir / "compare.svg", epsilons,
                                 [[r.lambda_top for r in rows]],
                                 ["lambda_top"], "estimate vs noise level",
                                 "epsilon", "rate"))
    manifest.add_run("compare", 0, files, time.perf_counter() - start)
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "lyapunov": _cmd_lyapunov,
    "bound": _cmd_bound,
    "sync": _cmd_sync,
    "pullback": _cmd_pullback,
    "concentration": _cmd_concentration,
    "compare": _cmd_compare,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_info:
        return exit_info.code if exit_info.code is not None else 0
    if args.command == "selftest":
        return 0 if run_selftest() else SELFTEST_ERROR
    try:
        resolved = _resolve(args)
    except (ConfigError, ValueError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return USAGE_ERROR
    try:
        manifest = Manifest(args.out, emit_config(resolved), resolved.seed,
                            _workers(args))
        code = _COMMANDS[args.command](args, resolved, manifest)
        manifest.finalize()
        return code
    except (NonFiniteError, NoConvergenceError, InsufficientBatchesError,
            KappaTooSmallError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return NUMERICAL_ERROR
    except LyapsyncError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
