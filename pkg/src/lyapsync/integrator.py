"""Time stepping for additive-noise reaction-diffusion dynamics on the unit torus.

The default scheme is an exponential Euler method that treats the diffusion
exactly per Fourier mode and draws the noise with the exact
Ornstein-Uhlenbeck one-step variance,

    uhat'(m) = e^{-L dt} uhat(m) + phi1(-L dt) dt bhat(m)
               + sqrt(2 eps) sigma_m eta_m,
    sigma_m^2 = (1 - e^{-2 L dt}) / (2 L),   sigma_0^2 = dt,

with L = kappa (2 pi m)^2, phi1(z) = (e^z - 1)/z and eta_m a standard
complex Gaussian with conjugate symmetry.  The semi-implicit alternative is

    uhat'(m) = (uhat(m) + dt bhat(m) + sqrt(2 eps dt) eta_m) / (1 + L dt).

The slow-motion variant rescales time t -> t/eps by coefficient
substitution (kappa -> kappa/eps, b -> b/eps, noise amplitude sqrt(2));
recorded times are then in the rescaled clock.  The nonlinearity is
evaluated pseudo-spectrally; 2/3 dealiasing is off by default.
"""

import math

import numpy as np

from .errors import NonFiniteError
from .field import Field, angular_wavenumbers_sq, validate_grid_size

EXPONENTIAL_EULER = "exponential_euler"
SEMI_IMPLICIT_EULER = "semi_implicit_euler"
SCHEMES = (EXPONENTIAL_EULER, SEMI_IMPLICIT_EULER)


class SimConfig:
    """Immutable description of one integration run."""

    __slots__ = ("potential", "kappa", "epsilon", "grid_size", "dt", "t_final",
                 "scheme", "rescaled", "seed", "dealias", "snapshot_stride")

    def __init__(self, potential, kappa, epsilon, grid_size, dt, t_final,
                 scheme=EXPONENTIAL_EULER, rescaled=False, seed=0,
                 dealias=False, snapshot_stride=None):
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if dt <= 0:
            raise ValueError("dt must be positive")
        if t_final <= 0:
            raise ValueError("t_final must be positive")
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if rescaled and epsilon == 0.0:
            raise ValueError("rescaled dynamics need epsilon > 0")
        self.potential = potential
        self.kappa = float(kappa)
        self.epsilon = float(epsilon)
        self.grid_size = validate_grid_size(grid_size)
        self.dt = float(dt)
        self.t_final = float(t_final)
        self.scheme = scheme
        self.rescaled = bool(rescaled)
        self.seed = int(seed)
        self.dealias = bool(dealias)
        self.snapshot_stride = snapshot_stride

    @property
    def clock(self):
        return "rescaled" if self.rescaled else "physical"

    @property
    def n_steps(self):
        return max(1, int(round(self.t_final / self.dt)))

    def replace(self, **changes):
        kwargs = {name: getattr(self, name) for name in self.__slots__}
        kwargs.update(changes)
        return SimConfig(**kwargs)

    def effective_coefficients(self):
        """(diffusion, drift scale, squared noise amplitude) for the chosen clock."""
        if self.rescaled:
            return self.kappa / self.epsilon, 1.0 / self.epsilon, 2.0
        return self.kappa, 1.0, 2.0 * self.epsilon


class NoiseStream:
    """Deterministic stream of spectral noise increments for one run.

    Identical (master seed, stream index) pairs reproduce identical draws
    bit-exactly.  Each step consumes one n x N block of standard normals in
    physical space; the spectral increments eta(m) = sqrt(N) dft(white) are
    standard complex Gaussians with conjugate symmetry, so the physical
    increments sqrt(dt) idft(eta) have covariance (dt/dx) delta_jk per
    component.
    """

    def __init__(self, master_seed, stream_index, n_components, grid_size):
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        self._shape = (int(n_components), validate_grid_size(grid_size))
        self._rng = np.random.default_rng(
            np.random.SeedSequence([self.master_seed, self.stream_index]))
        self.steps_drawn = 0

    def standard_modes(self):
        """Next spectral increment: E|eta(m)|^2 = 1 per mode, eta(-m) = conj(eta(m))."""
        white = self._rng.standard_normal(self._shape)
        self.steps_drawn += 1
        return np.fft.fft(white, axis=1) / math.sqrt(self._shape[1])

    def skip(self, steps, chunk=1024):
        """Discard increments, consuming the generator exactly as drawing would."""
        remaining = int(steps)
        while remaining > 0:
            take = min(chunk, remaining)
            self._rng.standard_normal((take,) + self._shape)
            remaining -= take
            self.steps_drawn += take


class _Stepper:
    """Precomputed per-mode coefficients for one configuration."""

    def __init__(self, cfg):
        diffusion, drift_scale, noise_variance = cfg.effective_coefficients()
        n_points = cfg.grid_size
        dt = cfg.dt
        lam = diffusion * angular_wavenumbers_sq(n_points)
        self.cfg = cfg
        self.drift_scale = drift_scale
        self.noise_amp = math.sqrt(noise_variance)
        self.decay = np.exp(-lam * dt)
        z = lam * dt
        safe = np.where(z == 0.0, 1.0, z)
        self.phi1_dt = dt * np.where(z == 0.0, 1.0, -np.expm1(-z) / safe)
        safe_lam = np.where(lam == 0.0, 1.0, lam)
        ou_var = np.where(lam == 0.0, dt, -np.expm1(-2.0 * lam * dt) / (2.0 * safe_lam))
        self.sigma = np.sqrt(ou_var)
        self.semi_denominator = 1.0 + lam * dt
        self.sqrt_dt = math.sqrt(dt)
        modes = np.abs(np.fft.fftfreq(n_points, d=1.0 / n_points))
        self.dealias_mask = (modes <= n_points / 3.0) if cfg.dealias else None
        self.semi_implicit = cfg.scheme == SEMI_IMPLICIT_EULER

    def drift_hat(self, physical_values):
        drift = self.cfg.potential.drift_grid(physical_values) * self.drift_scale
        drift_hat = np.fft.fft(drift, axis=-1) / physical_values.shape[-1]
        if self.dealias_mask is not None:
            drift_hat = drift_hat * self.dealias_mask
        return drift_hat

    def advance(self, state_hat, drift_hat, eta):
        """One step in spectral space; eta may be None for noiseless motion."""
        if self.semi_implicit:
            new = state_hat + self.cfg.dt * drift_hat
            if eta is not None:
                new = new + (self.noise_amp * self.sqrt_dt) * eta
            return new / self.semi_denominator
        new = self.decay * state_hat + self.phi1_dt * drift_hat
        if eta is not None:
            new = new + self.noise_amp * (self.sigma * eta)
        return new

    def to_physical(self, state_hat):
        return np.fft.ifft(state_hat, axis=-1).real * state_hat.shape[-1]

    def one_step(self, values, eta, drift=True):
        """Pure map (values, eta) -> next values; restarts are therefore bit-exact."""
        n_points = values.shape[-1]
        state_hat = np.fft.fft(values, axis=-1) / n_points
        drift_hat = self.drift_hat(values) if drift else 0.0
        return self.to_physical(self.advance(state_hat, drift_hat, eta))


def step(u, cfg, noise_increment=None):
    """Advance a single field by one time step; raises NonFiniteError on blow-up."""
    stepper = _Stepper(cfg)
    values = stepper.one_step(u.values, noise_increment)
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(cfg.dt)
    return Field(values)


class Trajectory:
    """Sampled output of a run: strided snapshots plus summary series.

    `final` is the exact endpoint state, recorded independently of the
    snapshot stride so restarts from it are bit-exact.
    """

    def __init__(self, times, snapshots, l2, sup, bulk_v, dist_minima, clock,
                 final, meta=None):
        self.times = np.asarray(times)
        self.snapshots = snapshots
        self.l2 = np.asarray(l2)
        self.sup = np.asarray(sup)
        self.bulk_v = np.asarray(bulk_v)
        self.dist_minima = np.asarray(dist_minima)
        self.clock = clock
        self.final = final
        self.meta = meta or {}

    def summary_rows(self):
        for i, t in enumerate(self.times):
            yield (t, self.l2[i], self.sup[i], self.bulk_v[i], self.dist_minima[i])


def _default_stride(cfg, target_samples=1000):
    if cfg.snapshot_stride is not None:
        return max(1, int(cfg.snapshot_stride))
    return max(1, cfg.n_steps // target_samples)


def _stiffness_record(cfg, values):
    _, drift_scale, _ = cfg.effective_coefficients()
    low, high = cfg.potential.hessian_eigen_range_grid(values)
    lam_stiff = drift_scale * max(float(np.abs(low).max()), float(np.abs(high).max()))
    return {
        "stiffness_bound": lam_stiff,
        "dt_recommended_max": 0.5 * min(1.0, 1.0 / lam_stiff) if lam_stiff > 0 else 0.5,
        "dt": cfg.dt,
    }


def simulate(initial, cfg, noise=None, record_snapshots=True, drift=True):
    """Integrate from t = 0 to t_final, sampling every snapshot_stride steps.

    Propagates NonFiniteError with the failing time on blow-up.  When
    cfg.rescaled is set the equation coefficients are substituted and the
    recorded times are in the rescaled clock.
    """
    potential = cfg.potential
    if noise is None:
        noise = NoiseStream(cfg.seed, 0, initial.n, cfg.grid_size)
    stepper = _Stepper(cfg)
    stride = _default_stride(cfg)
    n_steps = cfg.n_steps
    noisy = cfg.epsilon > 0.0

    values = np.array(initial.values)

    times, snapshots = [], []
    l2s, sups, bulks, dists = [], [], [], []

    def record(step_index):
        times.append(step_index * cfg.dt)
        if record_snapshots:
            snapshots.append(Field(values))
        l2s.append(float(np.sqrt((values * values).sum() / values.shape[-1])))
        sups.append(float(np.sqrt((values * values).sum(axis=-2).max())))
        bulks.append(float(potential.value_grid(values).mean()))
        dists.append(potential.minima_distance_sup(values))

    record(0)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            eta = noise.standard_modes() if noisy else None
            values = stepper.one_step(values, eta, drift=drift)
            if not np.all(np.isfinite(values)):
                raise NonFiniteError(k * cfg.dt)
            if k % stride == 0:
                record(k)

    meta = _stiffness_record(cfg, initial.values)
    meta["stride"] = stride
    meta["seed"] = cfg.seed
    return Trajectory(times, snapshots, l2s, sups, bulks, dists, cfg.clock,
                      Field(values), meta)


def stochastic_convolution(cfg, noise=None, record_snapshots=True):
    """Solution of the linear stochastic heat equation with zero initial data."""
    n_components = cfg.potential.n
    initial = Field.zero(n_components, cfg.grid_size)
    return simulate(initial, cfg, noise=noise, record_snapshots=record_snapshots,
                    drift=False)


class MultiTrajectory:
    """Shared-noise ensemble output: per-member trajectories plus diameters."""

    def __init__(self, trajectories, times, pair_distances, pair_labels, clock):
        self.trajectories = trajectories
        self.times = np.asarray(times)
        self.pair_distances = np.asarray(pair_distances)
        self.pair_labels = pair_labels
        self.clock = clock

    @property
    def diameters(self):
        """Max pairwise L2 distance at each sample time."""
        return self.pair_distances.max(axis=1)


def multi_simulate(initial_fields, cfg, noise=None, record_snapshots=False):
    """Advance several initial conditions in lockstep under one noise stream.

    All members share every noise increment (one realization of the driving
    noise), which is what makes pairwise contraction meaningful.
    """
    if len(initial_fields) < 1:
        raise ValueError("need at least one initial field")
    shapes = {(f.n, f.grid_size) for f in initial_fields}
    if len(shapes) != 1:
        raise ValueError("all initial fields must share (n, N)")
    n_components, n_points = shapes.pop()
    if noise is None:
        noise = NoiseStream(cfg.seed, 0, n_components, n_points)

    potential = cfg.potential
    stepper = _Stepper(cfg)
    stride = _default_stride(cfg)
    n_steps = cfg.n_steps
    noisy = cfg.epsilon > 0.0
    count = len(initial_fields)

    values = np.stack([np.array(f.values) for f in initial_fields])

    pair_labels = [(i, j) for i in range(count) for j in range(i + 1, count)]
    times, pair_rows = [], []
    members = [{"snapshots": [], "l2": [], "sup": [], "bulk": [], "dist": []}
               for _ in range(count)]

    def record(step_index):
        times.append(step_index * cfg.dt)
        row = []
        for i, j in pair_labels:
            delta = values[i] - values[j]
            row.append(float(np.sqrt((delta * delta).sum() / n_points)))
        pair_rows.append(row)
        for i in range(count):
            member = members[i]
            if record_snapshots:
                member["snapshots"].append(Field(values[i]))
            vi = values[i]
            member["l2"].append(float(np.sqrt((vi * vi).sum() / n_points)))
            member["sup"].append(float(np.sqrt((vi * vi).sum(axis=-2).max())))
            member["bulk"].append(float(potential.value_grid(vi).mean()))
            member["dist"].append(potential.minima_distance_sup(vi))

    record(0)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n_steps + 1):
            eta = noise.standard_modes() if noisy else None
            values = stepper.one_step(values,
                                      eta[np.newaxis] if eta is not None else None)
            if not np.all(np.isfinite(values)):
                raise NonFiniteError(k * cfg.dt)
            if k % stride == 0:
                record(k)

    trajectories = []
    for i in range(count):
        member = members[i]
        trajectories.append(Trajectory(times, member["snapshots"], member["l2"],
                                       member["sup"], member["bulk"],
                                       member["dist"], cfg.clock, Field(values[i])))
    return MultiTrajectory(trajectories, times, pair_rows, pair_labels, cfg.clock)
