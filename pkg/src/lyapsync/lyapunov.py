"""Tangent flow, top Lyapunov exponent estimation, and spectral growth bounds.

The tangent field h solves the linearization of the base dynamics,

    (d/dt - kappa Lap) h = -hess V(u(t)) h,

advanced with the same one-step scheme as the base flow and the Jacobian
frozen at the pre-step base field, which keeps each step strictly linear
in h.  The top exponent is estimated Benettin style: renormalize h to unit
L2 norm on a fixed cadence, accumulate the log growth factors, and average
over the post-burn-in window with batch-means error bars.

lambda_plus(u) denotes the largest eigenvalue of the self-adjoint operator
h -> kappa Lap h - hess V(u(x)) h; its trajectory average upper-bounds the
top exponent up to statistical error, which every experiment records.
"""

import math

import numpy as np

from .errors import (InsufficientBatchesError, NoConvergenceError,
                     NonFiniteError, WrongKindError)
from .field import Field, angular_wavenumbers_sq
from .integrator import NoiseStream, _Stepper
from .potentials import ROTATION_INVARIANT


class TangentState:
    """Base field, tangent field, and the accumulated log growth."""

    __slots__ = ("u", "h", "log_growth", "renorm_count")

    def __init__(self, u, h, log_growth=0.0, renorm_count=0):
        self.u = u
        self.h = h
        self.log_growth = float(log_growth)
        self.renorm_count = int(renorm_count)


def _tangent_values_step(stepper, base_values, tangent_values):
    """Advance the tangent by one step with the Jacobian frozen at base_values."""
    n_points = tangent_values.shape[-1]
    tangent_hat = np.fft.fft(tangent_values, axis=-1) / n_points
    drift = -stepper.cfg.potential.hessian_apply_grid(base_values, tangent_values)
    drift_hat = np.fft.fft(drift * stepper.drift_scale, axis=-1) / n_points
    if stepper.dealias_mask is not None:
        drift_hat = drift_hat * stepper.dealias_mask
    return stepper.to_physical(stepper.advance(tangent_hat, drift_hat, None))


def tangent_step(state, cfg, noise_increment=None):
    """One coupled step of base and tangent; the tangent carries no noise."""
    stepper = _Stepper(cfg)
    new_h = _tangent_values_step(stepper, state.u.values, state.h.values)
    new_u = stepper.one_step(state.u.values, noise_increment)
    if not (np.all(np.isfinite(new_u)) and np.all(np.isfinite(new_h))):
        raise NonFiniteError(cfg.dt)
    return TangentState(Field(new_u), Field(new_h), state.log_growth,
                        state.renorm_count)


def _l2(values):
    return float(np.sqrt((values * values).sum() / values.shape[-1]))


def _inner(a, b):
    return float((a * b).sum() / a.shape[-1])


def top_eigenvalue(u, potential, kappa, tol=1e-8, max_iter=100_000, start=None):
    """Largest eigenvalue of h -> kappa Lap h - hess V(u(x)) h.

    Shifted block power iteration: the operator is shifted by the sum of
    its Laplacian spectral bound and the largest pointwise Hessian
    eigenvalue plus one, making the shifted operator positive definite so
    its dominant eigenvalues are the sought extreme ones; a small
    orthonormalized block with Rayleigh-Ritz extraction keeps degenerate
    or clustered leaders (the tangential directions at sphere minima) from
    stalling the iteration.  Raises NoConvergenceError carrying the best
    iterate after max_iter steps.
    """
    value, _ = _power_top(_as_values(u), potential, kappa, tol, max_iter, start)
    return value


def _as_values(u):
    return u.values if isinstance(u, Field) else np.asarray(u, dtype=float)


def _power_start_block(values, potential, block):
    """Constant fields along the grid-averaged Hessian eigenbasis, plus jitter."""
    n, n_points = values.shape
    mean_hessian = np.empty((n, n))
    for c in range(n):
        basis = np.zeros((n, n_points))
        basis[c] = 1.0
        mean_hessian[:, c] = potential.hessian_apply_grid(values, basis).mean(axis=-1)
    mean_hessian = 0.5 * (mean_hessian + mean_hessian.T)
    _, vectors = np.linalg.eigh(mean_hessian)
    rng = np.random.default_rng(12345)
    columns = np.empty((block, n, n_points))
    for b in range(block):
        if b < n:
            columns[b] = np.repeat(vectors[:, b][:, np.newaxis], n_points, axis=1)
        else:
            columns[b] = rng.standard_normal((n, n_points))
        columns[b] += 1e-6 * rng.standard_normal((n, n_points))
    return columns


def _orthonormalize(block_columns):
    count, n, n_points = block_columns.shape
    flat = block_columns.reshape(count, n * n_points).T
    q, _ = np.linalg.qr(flat)
    return np.ascontiguousarray(q.T).reshape(count, n, n_points)


def _power_top(values, potential, kappa, tol, max_iter, start=None, block=None):
    n, n_points = values.shape
    if block is None:
        # a roomy block turns the slow per-mode spectral gaps into the much
        # wider gap to the (block+1)-th eigenvalue
        block = min(max(n + 2, 10), n * n_points)
    w2 = angular_wavenumbers_sq(n_points)
    _, high = potential.hessian_eigen_range_grid(values)
    shift = kappa * float(w2.max()) + max(float(high.max()), 0.0) + 1.0

    def apply_shifted(columns):
        col_hat = np.fft.fft(columns, axis=-1) / n_points
        laplacian = np.fft.ifft(-w2 * col_hat, axis=-1).real * n_points
        return (kappa * laplacian - potential.hessian_apply_grid(values, columns)
                + shift * columns)

    if start is not None and start.shape == (block, n, n_points):
        columns = start.copy()
    else:
        columns = _power_start_block(values, potential, block)
    columns = _orthonormalize(columns)

    resid_prev = None
    contraction = 0.5
    best = (np.inf, None, None)
    for iteration in range(1, max_iter + 1):
        images = apply_shifted(columns)
        # Rayleigh-Ritz on the block; the QR columns are orthonormal in the
        # plain dot product, so the Gram matrix uses the same inner product
        # (the uniform dx weight does not move eigenvalues)
        gram = np.einsum("acx,bcx->ab", columns, images)
        gram = 0.5 * (gram + gram.T)
        ritz_values, ritz_vectors = np.linalg.eigh(gram)
        rho = float(ritz_values[-1])
        weights = ritz_vectors[:, -1]
        top_vector = np.einsum("b,bcx->cx", weights, columns)
        top_image = np.einsum("b,bcx->cx", weights, images)
        resid = float(np.linalg.norm(top_image - rho * top_vector))
        if resid < best[0]:
            best = (resid, rho, columns)
        if resid_prev is not None and resid_prev > 0:
            ratio = resid / resid_prev
            if 0.0 < ratio < 1.0:
                contraction = 0.7 * contraction + 0.3 * ratio
        resid_prev = resid
        gap_estimate = max((1.0 - contraction) * rho, 1e-12)
        error_estimate = resid * resid / gap_estimate
        eigenvalue = rho - shift
        converged = (iteration >= 4
                     and error_estimate <= tol * max(1.0, abs(eigenvalue)))
        if converged or resid <= 1e-13 * shift:
            return eigenvalue, columns
        columns = _orthonormalize(images)
    raise NoConvergenceError(best[1] - shift, best[0], max_iter)


def top_eigenvalue_dense(u, potential, kappa):
    """Brute-force reference: dense assembly plus a symmetric eigensolver."""
    values = _as_values(u)
    n, n_points = values.shape
    modes = np.fft.fftfreq(n_points, d=1.0 / n_points)
    offsets = np.subtract.outer(np.arange(n_points), np.arange(n_points))
    angles = 2.0 * np.pi * np.einsum("m,jk->mjk", modes, offsets) / n_points
    laplacian = -(np.cos(angles) * ((2.0 * np.pi * modes) ** 2)[:, None, None]).sum(axis=0) / n_points
    matrix = np.zeros((n * n_points, n * n_points))
    for c in range(n):
        block = slice(c * n_points, (c + 1) * n_points)
        matrix[block, block] += kappa * laplacian
    for j in range(n_points):
        hess = potential.hessian(values[:, j])
        for a in range(n):
            for b in range(n):
                matrix[a * n_points + j, b * n_points + j] -= hess[a, b]
    matrix = 0.5 * (matrix + matrix.T)
    return float(np.linalg.eigvalsh(matrix)[-1])


class RadialRateBound:
    """Lower bound on -lambda_plus for rotation-invariant potentials."""

    __slots__ = ("value", "dist_sup")

    def __init__(self, value, dist_sup):
        self.value = float(value)
        self.dist_sup = float(dist_sup)


def radial_decay_lower_bound(u, potential, kappa, c_star=0.5):
    """2 int g'(|u|^2) dx - (4 c_star^2 / kappa) ||g'(|u|^2)||_2^2.

    Valid as a lower bound for -lambda_plus when the field sits near the
    minima set; the distance is reported alongside rather than folded into
    the value.
    """
    if potential.kind != ROTATION_INVARIANT:
        raise WrongKindError("radial decay bound needs a rotation-invariant potential")
    values = _as_values(u)
    slope = potential.radial_slope_grid(values)
    mean_term = 2.0 * float(slope.mean())
    l2_sq = float((slope * slope).mean())
    value = mean_term - (4.0 * c_star * c_star / kappa) * l2_sq
    return RadialRateBound(value, potential.minima_distance_sup(values))


class LyapunovReport:
    """Top-exponent estimate with batch-means error bars and the ergodic bound."""

    def __init__(self, lambda_top, stderr, batches, ergodic_lambda_plus,
                 ergodic_stderr, t_effective, clock, epsilon, kappa,
                 potential_name, n, grid_size, dt, t_final, seed,
                 renorm_count, lambda_plus_failures):
        self.lambda_top = lambda_top
        self.stderr = stderr
        self.batches = batches
        self.ergodic_lambda_plus = ergodic_lambda_plus
        self.ergodic_stderr = ergodic_stderr
        self.t_effective = t_effective
        self.clock = clock
        self.epsilon = epsilon
        self.kappa = kappa
        self.potential_name = potential_name
        self.n = n
        self.grid_size = grid_size
        self.dt = dt
        self.t_final = t_final
        self.seed = seed
        self.renorm_count = renorm_count
        self.lambda_plus_failures = lambda_plus_failures

    @property
    def lambda_top_physical(self):
        """Estimate converted to the physical clock (identity when not rescaled)."""
        if self.clock == "rescaled":
            return self.lambda_top * self.epsilon
        return self.lambda_top

    @property
    def ordering_ok(self):
        """Soft check lambda_top <= ergodic average + 3 combined stderr."""
        if self.ergodic_lambda_plus is None:
            return None
        combined = math.sqrt(self.stderr**2 + self.ergodic_stderr**2)
        return self.lambda_top <= self.ergodic_lambda_plus + 3.0 * combined

    def csv_row(self):
        return (self.potential_name, self.n, self.grid_size, self.kappa,
                self.epsilon, self.dt, self.t_final, self.lambda_top,
                self.stderr, self.ergodic_lambda_plus, self.clock)


CSV_HEADER = ("potential", "n", "N", "kappa", "epsilon", "dt", "T",
              "lambda_top", "stderr", "ergodic_lambda_plus", "clock")


def _batch_stats(samples, durations_equal_rate=None, batches=20):
    """Batch means over equally sized contiguous batches of the sample list."""
    samples = np.asarray(samples, dtype=float)
    per_batch = samples.size // batches
    if per_batch < 2:
        raise InsufficientBatchesError(
            f"{samples.size} post-burn-in samples cannot fill {batches} batches "
            "of at least 2; extend the horizon or reduce the batch count")
    used = samples[samples.size - per_batch * batches:]
    means = used.reshape(batches, per_batch).mean(axis=1)
    stderr = float(means.std(ddof=1) / math.sqrt(batches))
    return float(used.mean()), stderr, used.size


def _run_tangent(cfg, initial, h0, renorm_every, burn_in, batches, noise,
                 track_lambda_plus, lambda_tol=1e-8):
    if not 0.0 <= burn_in < 1.0:
        raise ValueError("burn_in must lie in [0, 1)")
    potential = cfg.potential
    stepper = _Stepper(cfg)
    if noise is None:
        noise = NoiseStream(cfg.seed, 0, initial.n, cfg.grid_size)
    noisy = cfg.epsilon > 0.0
    rescale_rate = 1.0 / cfg.epsilon if cfg.rescaled else 1.0

    n_steps = cfg.n_steps
    renorm_every = max(1, int(renorm_every))
    logs, lambda_samples = [], []
    failures = 0
    warm_block = None
    n_points = cfg.grid_size

    # base and tangent share the per-mode coefficients, so they advance as
    # one stacked array: one transform per direction instead of two
    with_tangent = h0 is not None
    pair = np.empty(((2 if with_tangent else 1), initial.n, n_points))
    pair[0] = initial.values
    if with_tangent:
        norm0 = _l2(h0.values)
        if norm0 == 0:
            raise ValueError("h0 must be nonzero")
        pair[1] = h0.values / norm0
    drift = np.empty_like(pair)

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            drift[0] = potential.drift_grid(pair[0])
            if with_tangent:
                drift[1] = -potential.hessian_apply_grid(pair[0], pair[1])
            pair_hat = np.fft.fft(pair, axis=-1) / n_points
            drift_hat = np.fft.fft(drift, axis=-1) / n_points
            if stepper.drift_scale != 1.0:
                drift_hat *= stepper.drift_scale
            if stepper.dealias_mask is not None:
                drift_hat *= stepper.dealias_mask
            if stepper.semi_implicit:
                new_hat = pair_hat + cfg.dt * drift_hat
                if noisy:
                    new_hat[0] += (stepper.noise_amp * stepper.sqrt_dt) * noise.standard_modes()
                new_hat /= stepper.semi_denominator
            else:
                new_hat = stepper.decay * pair_hat + stepper.phi1_dt * drift_hat
                if noisy:
                    new_hat[0] += stepper.noise_amp * (stepper.sigma * noise.standard_modes())
            pair = np.fft.ifft(new_hat, axis=-1).real * n_points
            if not np.all(np.isfinite(pair[0])):
                raise NonFiniteError(k * cfg.dt)
            if k % renorm_every == 0:
                if with_tangent:
                    growth = _l2(pair[1])
                    if growth == 0 or not np.isfinite(growth):
                        raise NonFiniteError(k * cfg.dt, "tangent norm degenerate")
                    logs.append(math.log(growth))
                    pair[1] /= growth
                if track_lambda_plus:
                    try:
                        value, warm_block = _power_top(pair[0], potential, cfg.kappa,
                                                       lambda_tol, 100_000, warm_block)
                    except NoConvergenceError as err:
                        value = err.best_value
                        warm_block = None
                        failures += 1
                    lambda_samples.append(value * rescale_rate)

    interval = renorm_every * cfg.dt
    events = len(logs) if with_tangent else len(lambda_samples)
    skip = int(math.floor(burn_in * events))

    lambda_top = stderr = None
    if with_tangent:
        window = np.asarray(logs[skip:])
        rates = window / interval
        lambda_top, stderr, used = _batch_stats(rates, batches=batches)
        t_effective = used * interval
    else:
        t_effective = (events - skip) * interval

    ergodic = ergodic_stderr = None
    if track_lambda_plus:
        ergodic, ergodic_stderr, _ = _batch_stats(lambda_samples[skip:], batches=batches)

    return LyapunovReport(
        lambda_top=lambda_top, stderr=stderr, batches=batches,
        ergodic_lambda_plus=ergodic, ergodic_stderr=ergodic_stderr,
        t_effective=t_effective, clock=cfg.clock, epsilon=cfg.epsilon,
        kappa=cfg.kappa, potential_name=potential.name, n=initial.n,
        grid_size=cfg.grid_size, dt=cfg.dt, t_final=cfg.t_final,
        seed=cfg.seed, renorm_count=events, lambda_plus_failures=failures)


def top_lyapunov(cfg, initial, h0, renorm_every=100, burn_in=0.1, batches=20,
                 noise=None, track_lambda_plus=True):
    """Estimate the top Lyapunov exponent along one trajectory.

    The estimate is the accumulated log growth of the renormalized tangent
    divided by the effective time; the report carries batch-means error
    bars, the ergodic lambda_plus average sampled on the same cadence, and
    the clock the numbers refer to.
    """
    return _run_tangent(cfg, initial, h0, renorm_every, burn_in, batches,
                        noise, track_lambda_plus)


def ergodic_bound(cfg, initial, sample_every=100, burn_in=0.1, batches=20,
                  noise=None):
    """Trajectory average of lambda_plus(u(t)): the spectral upper bound."""
    report = _run_tangent(cfg, initial, None, sample_every, burn_in, batches,
                          noise, True)
    return report
