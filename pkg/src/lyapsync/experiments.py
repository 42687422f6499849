"""Pre-packaged studies tying simulation to the analytic bounds.

Probabilistic statements are rendered as success fractions over many seeds
rather than hard per-path assertions; each run derives its own noise stream
from (master seed, run index), so sweeps parallelize with no shared state
and rerunning a plan reproduces every number exactly.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .field import Field
from .integrator import NoiseStream, SimConfig, multi_simulate, simulate
from .lyapunov import top_lyapunov
from .potentials import NONDEGENERATE
from .theory import (degenerate_bound_constants, degenerate_rate_bound,
                     nondegenerate_rate_bound)

DIAMETER_FLOOR = 1e-13

# stream indices are spaced so that noise and sampler streams never collide
_NOISE_SLOT = 0
_INIT_SLOT = 1
_SLOTS = 4


class ExperimentPlan:
    """A sweep of runs around one base configuration."""

    def __init__(self, name, cfg, kappas=None, epsilons=None, seeds=(0,),
                 k_points=5, radius=2.0, center=None, pullback_starts=(25.0, 50.0, 100.0),
                 delta=0.25, burn_in=0.1, renorm_every=100, batches=20,
                 budget=10_000, with_matched_lyapunov=True, workers=1,
                 initial_fields=None):
        self.name = name
        self.cfg = cfg
        self.kappas = tuple(kappas) if kappas else (cfg.kappa,)
        self.epsilons = tuple(epsilons) if epsilons else (cfg.epsilon,)
        self.seeds = tuple(int(s) for s in seeds)
        self.k_points = int(k_points)
        self.radius = float(radius)
        self.center = center
        self.pullback_starts = tuple(float(t) for t in pullback_starts)
        self.delta = float(delta)
        self.burn_in = float(burn_in)
        self.renorm_every = int(renorm_every)
        self.batches = int(batches)
        self.with_matched_lyapunov = bool(with_matched_lyapunov)
        self.workers = int(workers)
        # explicit ensemble overrides the sampler (deterministic studies)
        self.initial_fields = initial_fields
        size = len(self.kappas) * len(self.epsilons) * len(self.seeds)
        if size > budget:
            raise ValueError(f"sweep size {size} exceeds budget {budget}")

    def sweep(self):
        index = 0
        for kappa in self.kappas:
            for epsilon in self.epsilons:
                for seed in self.seeds:
                    yield index, self.cfg.replace(kappa=kappa, epsilon=epsilon,
                                                  seed=seed)
                    index += 1


def sample_initial_fields(potential, grid_size, count, radius, rng, center=None,
                          low_modes=4):
    """Random smooth fields with sup-norm at most `radius` around `center`."""
    n = potential.n
    fields = []
    for _ in range(count):
        coefficients = np.zeros((n, grid_size), dtype=complex)
        coefficients[:, 0] = rng.standard_normal(n)
        for m in range(1, low_modes + 1):
            draw = rng.standard_normal((n, 2))
            coefficients[:, m] = (draw[:, 0] + 1j * draw[:, 1]) / (1 + m)
            coefficients[:, grid_size - m] = np.conj(coefficients[:, m])
        raw = np.fft.ifft(coefficients, axis=1).real * grid_size
        sup = np.sqrt((raw * raw).sum(axis=0).max())
        target = radius * rng.uniform(0.2, 1.0)
        raw = raw * (target / max(sup, 1e-300))
        if center is not None:
            raw = raw + np.asarray(center, dtype=float)[:, np.newaxis]
        fields.append(Field(raw))
    return fields


def _init_rng(cfg, run_index):
    return np.random.default_rng(
        np.random.SeedSequence([cfg.seed, _SLOTS * run_index + _INIT_SLOT]))


def _noise_for(cfg, run_index, n_components):
    return NoiseStream(cfg.seed, _SLOTS * run_index + _NOISE_SLOT,
                       n_components, cfg.grid_size)


def _fit_decay_rate(times, diameters, burn_in_fraction):
    """Least-squares slope of log diameter over the post-burn-in window."""
    times = np.asarray(times, dtype=float)
    diameters = np.asarray(diameters, dtype=float)
    floored = bool((diameters <= DIAMETER_FLOOR).any())
    end = diameters.size
    if floored:
        end = int(np.argmax(diameters <= DIAMETER_FLOOR))
    start = int(np.searchsorted(times, burn_in_fraction * times[-1]))
    window = slice(start, max(end, start + 2))
    t = times[window]
    y = np.log(np.maximum(diameters[window], DIAMETER_FLOOR))
    if t.size < 2:
        return 0.0, float("nan"), floored
    design = np.stack([t, np.ones_like(t)], axis=1)
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.sqrt(((design @ coef - y) ** 2).mean()))
    return float(coef[0]), residual, floored


class SyncReport:
    """Contraction of shared-noise trajectories, with the matched exponent."""

    def __init__(self, seed, kappa, epsilon, clock, times, diameters,
                 fitted_rate, fit_residual, floored, lambda_top, lambda_stderr,
                 pair_labels, pair_distances):
        self.seed = seed
        self.kappa = kappa
        self.epsilon = epsilon
        self.clock = clock
        self.times = np.asarray(times)
        self.diameters = np.asarray(diameters)
        self.fitted_rate = fitted_rate
        self.fit_residual = fit_residual
        self.floored = floored
        self.lambda_top = lambda_top
        self.lambda_stderr = lambda_stderr
        self.pair_labels = pair_labels
        self.pair_distances = np.asarray(pair_distances)

    @property
    def initial_diameter(self):
        return float(self.diameters[0])

    @property
    def final_diameter(self):
        return float(self.diameters[-1])


def _ensemble_for(plan, cfg, rng):
    if plan.initial_fields is not None:
        return list(plan.initial_fields)
    return sample_initial_fields(cfg.potential, cfg.grid_size, plan.k_points,
                                 plan.radius, rng, plan.center)


def _sync_single(plan, run_index, cfg):
    potential = cfg.potential
    rng = _init_rng(cfg, run_index)
    fields = _ensemble_for(plan, cfg, rng)
    noise = _noise_for(cfg, run_index, potential.n)
    ensemble = multi_simulate(fields, cfg, noise=noise)
    rate, residual, floored = _fit_decay_rate(ensemble.times, ensemble.diameters,
                                              plan.burn_in)
    lambda_top = lambda_stderr = None
    if plan.with_matched_lyapunov:
        h0 = Field(rng.standard_normal((potential.n, cfg.grid_size)))
        report = top_lyapunov(cfg, fields[0], h0,
                              renorm_every=plan.renorm_every,
                              burn_in=plan.burn_in, batches=plan.batches,
                              noise=_noise_for(cfg, run_index + 1_000_000, potential.n),
                              track_lambda_plus=False)
        lambda_top, lambda_stderr = report.lambda_top, report.stderr
    return SyncReport(cfg.seed, cfg.kappa, cfg.epsilon, cfg.clock,
                      ensemble.times, ensemble.diameters, rate, residual,
                      floored, lambda_top, lambda_stderr,
                      ensemble.pair_labels, ensemble.pair_distances)


def _map_runs(plan, worker):
    jobs = list(plan.sweep())
    if plan.workers > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            futures = [pool.submit(worker, plan, index, cfg) for index, cfg in jobs]
            return [f.result() for f in futures]
    return [worker(plan, index, cfg) for index, cfg in jobs]


def run_sync(plan):
    """K-point shared-noise contraction with an exponential-rate fit."""
    count = (len(plan.initial_fields) if plan.initial_fields is not None
             else plan.k_points)
    if count < 2:
        raise ValueError("synchronization needs at least two initial fields")
    return _map_runs(plan, _sync_single)


class PullbackReport:
    """Diameter at time zero of runs started increasingly early."""

    def __init__(self, seed, kappa, epsilon, clock, start_times, diameters_at_zero):
        self.seed = seed
        self.kappa = kappa
        self.epsilon = epsilon
        self.clock = clock
        self.start_times = tuple(start_times)
        self.diameters_at_zero = tuple(diameters_at_zero)

    @property
    def monotone(self):
        d = self.diameters_at_zero
        return all(d[i + 1] <= d[i] for i in range(len(d) - 1))


def _pullback_single(plan, run_index, cfg):
    potential = cfg.potential
    rng = _init_rng(cfg, run_index)
    fields = _ensemble_for(plan, cfg, rng)
    starts = sorted(plan.pullback_starts)
    t_max = max(starts)
    diameters = []
    for start in starts:
        # one noise realization on [-t_max, 0]: a run from -t skips the
        # unused prefix of the same stream
        noise = _noise_for(cfg, run_index, potential.n)
        skip_steps = int(round((t_max - start) / cfg.dt))
        noise.skip(skip_steps)
        run_cfg = cfg.replace(t_final=start) if start > 0 else None
        if run_cfg is None:
            deltas = [f.values - g.values for f in fields for g in fields]
            diameter = max(float(np.sqrt((d * d).sum() / cfg.grid_size))
                           for d in deltas)
        else:
            ensemble = multi_simulate(fields, run_cfg, noise=noise)
            diameter = float(ensemble.diameters[-1])
        diameters.append(diameter)
    return PullbackReport(cfg.seed, cfg.kappa, cfg.epsilon, cfg.clock,
                          starts, diameters)


def run_pullback(plan):
    """Diameter at the common end time as a function of how early runs start."""
    return _map_runs(plan, _pullback_single)


class ConcentrationRow:
    def __init__(self, epsilon, fraction, occupations):
        self.epsilon = epsilon
        self.fraction = fraction
        self.occupations = tuple(occupations)


def _concentration_single(plan, run_index, cfg):
    potential = cfg.potential
    if potential.kind == NONDEGENERATE:
        start = Field.constant(potential.minima[0].location, cfg.grid_size)
        n_bins = len(potential.minima)
    else:
        start = Field.constant(
            np.concatenate([[potential.radii[0]], np.zeros(potential.n - 1)]),
            cfg.grid_size)
        n_bins = len(potential.radii)
    noise = _noise_for(cfg, run_index, potential.n)
    trajectory = simulate(start, cfg, noise=noise, record_snapshots=True)
    keep = trajectory.times > plan.burn_in * cfg.t_final
    distances = trajectory.dist_minima[keep]
    fraction = float((distances < plan.delta).mean()) if distances.size else 0.0
    counts = np.zeros(n_bins)
    concentrated = 0
    for snapshot, dist in zip(
            [s for s, k in zip(trajectory.snapshots, keep) if k], distances):
        if dist < plan.delta:
            concentrated += 1
            if potential.kind == NONDEGENERATE:
                counts[potential.nearest_minimum_index(snapshot.values)] += 1
            else:
                counts[potential.nearest_sphere_index(snapshot.values)] += 1
    occupations = counts / concentrated if concentrated else counts
    return ConcentrationRow(cfg.epsilon, fraction, occupations)


def run_concentration(plan):
    """Fraction of time near the minima set, per noise intensity,
    with per-minimum occupation fractions."""
    return _map_runs(plan, _concentration_single)


class ComparisonRow:
    def __init__(self, kappa, epsilon, clock, lambda_top, stderr,
                 ergodic_lambda_plus, ergodic_stderr, analytic_bound,
                 ordering_ok, seed):
        self.kappa = kappa
        self.epsilon = epsilon
        self.clock = clock
        self.lambda_top = lambda_top
        self.stderr = stderr
        self.ergodic_lambda_plus = ergodic_lambda_plus
        self.ergodic_stderr = ergodic_stderr
        self.analytic_bound = analytic_bound
        self.ordering_ok = ordering_ok
        self.seed = seed


def _comparison_single(plan, run_index, cfg):
    potential = cfg.potential
    rng = _init_rng(cfg, run_index)
    if potential.kind == NONDEGENERATE:
        start = Field.constant(potential.minima[0].location, cfg.grid_size)
    else:
        start = Field.constant(
            np.concatenate([[potential.radii[0]], np.zeros(potential.n - 1)]),
            cfg.grid_size)
    h0 = Field(rng.standard_normal((potential.n, cfg.grid_size)))
    report = top_lyapunov(cfg, start, h0, renorm_every=plan.renorm_every,
                          burn_in=plan.burn_in, batches=plan.batches,
                          noise=_noise_for(cfg, run_index, potential.n),
                          track_lambda_plus=True)
    bound = None
    if potential.kind == NONDEGENERATE:
        bound = nondegenerate_rate_bound(potential, cfg.kappa, eta=0.0)
    else:
        _, kappa_min = degenerate_bound_constants(potential)
        if cfg.kappa > kappa_min:
            bound = degenerate_rate_bound(potential, cfg.kappa).total
    return ComparisonRow(cfg.kappa, cfg.epsilon, cfg.clock, report.lambda_top,
                         report.stderr, report.ergodic_lambda_plus,
                         report.ergodic_stderr, bound, report.ordering_ok,
                         cfg.seed)


def run_bound_comparison(plan):
    """Joint exponent estimate, ergodic spectral average, and analytic bound.

    The ordering estimate <= ergodic average + 3 combined stderr is checked
    per row; the analytic bound is reported alongside, never asserted,
    since its onset in the noise intensity is not quantified.
    """
    return _map_runs(plan, _comparison_single)


def default_comparison_suite(grid_size=64, workers=1):
    """The stock bound-vs-estimate suite: one plan per dynamical regime."""
    from .potentials import make_potential
    plans = []
    quad = SimConfig(make_potential("quadratic_well", n=1, a=1.0), kappa=1.0,
                     epsilon=0.1, grid_size=grid_size, dt=1e-3, t_final=200.0)
    plans.append(ExperimentPlan("quadratic_well", quad, workers=workers))
    wells = SimConfig(make_potential("double_well"), kappa=1.0, epsilon=0.05,
                      grid_size=grid_size, dt=1e-3, t_final=300.0)
    plans.append(ExperimentPlan("double_well", wells, workers=workers))
    # strongly smoothed regime (diffusion kappa/eps): a coarse grid and a
    # sparser spectral-bound cadence lose nothing
    sphere = SimConfig(make_potential("sombrero", n=3), kappa=8.0, epsilon=0.05,
                       grid_size=32, dt=2e-3, t_final=300.0, rescaled=True)
    plans.append(ExperimentPlan("sombrero", sphere, renorm_every=200,
                                workers=workers))
    return plans
