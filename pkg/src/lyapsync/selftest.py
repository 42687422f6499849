"""Built-in invariant suite behind the `selftest` subcommand.

Each check is small enough to run on a fresh checkout in seconds; together
they cover the transform layer, the integrator's exactness properties, and
the closed-form constants, so a green selftest means the installation
computes what it claims to.
"""

import tempfile

from pathlib import Path

import numpy as np

from .field import Field, dft, heat_semigroup, idft, l2_norm, sup_norm
from .integrator import NoiseStream, SimConfig, simulate, stochastic_convolution
from .output import write_csv
from .potentials import make_potential
from .theory import (degenerate_bound_constants, degenerate_rate_bound,
                     det_weight_point, sphere_gaussian_moments)


def _check_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        n_points = int(2 ** rng.integers(3, 9))
        field = Field(rng.standard_normal((n, n_points)))
        back = idft(dft(field))
        if np.abs(back.values - field.values).max() > 1e-12 * max(1.0, np.abs(field.values).max()):
            return "round trip exceeded 1e-12"
    return None


def _check_parseval():
    rng = np.random.default_rng(8)
    for _ in range(50):
        field = Field(rng.standard_normal((2, 128)))
        physical = (field.values**2).sum() / 128
        spectral = (np.abs(field.spectral) ** 2).sum()
        if abs(physical - spectral) > 1e-12 * max(physical, 1.0):
            return "Parseval identity exceeded 1e-12"
    return None


def _check_semigroup():
    rng = np.random.default_rng(9)
    field = Field(rng.standard_normal((2, 64)))
    lhs = heat_semigroup(heat_semigroup(field, 1.3, 0.2), 1.3, 0.5)
    rhs = heat_semigroup(field, 1.3, 0.7)
    if np.abs(lhs.values - rhs.values).max() > 1e-12:
        return "semigroup law exceeded 1e-12"
    if sup_norm(field) < l2_norm(field):
        return "sup norm fell below L2 norm"
    return None


def _check_flow_property():
    potential = make_potential("sombrero", n=2)
    cfg = SimConfig(potential, kappa=1.0, epsilon=0.1, grid_size=32, dt=1e-3,
                    t_final=0.2, seed=11, snapshot_stride=100)
    full = simulate(Field.constant([1.2, 0.0], 32), cfg,
                    noise=NoiseStream(11, 0, 2, 32))
    restart_noise = NoiseStream(11, 0, 2, 32)
    first = simulate(Field.constant([1.2, 0.0], 32), cfg.replace(t_final=0.1),
                     noise=restart_noise)
    second = simulate(first.final, cfg.replace(t_final=0.1), noise=restart_noise)
    if not np.array_equal(second.final.values, full.final.values):
        return "restart from snapshot is not bit-exact"
    return None


def _check_noise_scaling():
    cfg = SimConfig(make_potential("free", n=1), kappa=1.0, epsilon=0.05,
                    grid_size=32, dt=1e-3, t_final=0.05, seed=3)
    small = stochastic_convolution(cfg, noise=NoiseStream(3, 0, 1, 32))
    big = stochastic_convolution(cfg.replace(epsilon=0.2),
                                 noise=NoiseStream(3, 0, 1, 32))
    if not np.array_equal(big.final.values, 2.0 * small.final.values):
        return "noise amplitude does not scale by sqrt(epsilon) exactly"
    return None


def _check_rerun_bytes():
    cfg = SimConfig(make_potential("double_well"), kappa=1.0, epsilon=0.1,
                    grid_size=32, dt=1e-3, t_final=0.1, seed=5,
                    snapshot_stride=10)
    with tempfile.TemporaryDirectory() as tmp:
        paths = []
        for attempt in range(2):
            trajectory = simulate(Field.constant([1.0], 32), cfg,
                                  noise=NoiseStream(5, 0, 1, 32))
            path = Path(tmp) / f"run{attempt}.csv"
            write_csv(path, ("time", "l2_norm", "sup_norm", "bulk_potential",
                             "dist_to_minima"), trajectory.summary_rows())
            paths.append(path.read_bytes())
        if paths[0] != paths[1]:
            return "rerun with fixed seed changed CSV bytes"
    return None


def _check_theta_identity():
    quadratic = make_potential("quadratic_well", n=2, a=1.0)
    for kappa in (1.0, 8.0):
        theta, _ = det_weight_point(quadratic, quadratic.minima[0], kappa)
        if abs(theta - 1.0) > 1e-10:
            return f"theta at identity Hessian is {theta}, expected 1"
    return None


def _check_constants():
    sombrero = make_potential("sombrero", n=3)
    c_max, kappa_min = degenerate_bound_constants(sombrero, 0.5)
    bound = degenerate_rate_bound(sombrero, 8.0, 0.5)
    if abs(c_max - 0.5) > 1e-12 or abs(kappa_min - 4.0) > 1e-12:
        return f"constants off: c_max={c_max}, kappa_min={kappa_min}"
    if (abs(bound.main_term + 1.0) > 1e-12 or abs(bound.error_term - 0.125) > 1e-12
            or abs(bound.total + 0.875) > 1e-12):
        return "sphere bound terms off"
    moments = sphere_gaussian_moments(sombrero, 1.0, 4.0)
    if abs(moments.var_tangent - 0.5) > 1e-15 or abs(moments.fourth_tangent - 0.75) > 1e-15:
        return "Gaussian moments off"
    return None


def _check_potential_derivatives():
    rng = np.random.default_rng(21)
    for name, params in (("sombrero", {"n": 3}), ("double_well", {}),
                         ("two_sphere", {"n": 3})):
        potential = make_potential(name, **params)
        for _ in range(20):
            z = rng.uniform(-2, 2, potential.n)
            step_size = 1e-6
            for c in range(potential.n):
                bump = np.zeros(potential.n)
                bump[c] = step_size
                numeric = (potential.value(z + bump) - potential.value(z - bump)) / (2 * step_size)
                if abs(numeric - potential.gradient(z)[c]) > 1e-5 * max(1.0, abs(numeric)):
                    return f"{name}: gradient mismatch at {z}"
    return None


CHECKS = (
    ("dft/idft round trip", _check_roundtrip),
    ("parseval identity", _check_parseval),
    ("heat semigroup law", _check_semigroup),
    ("flow property bit-exact restart", _check_flow_property),
    ("noise sqrt(epsilon) scaling", _check_noise_scaling),
    ("byte-identical rerun", _check_rerun_bytes),
    ("determinant weight at identity", _check_theta_identity),
    ("closed-form constants", _check_constants),
    ("potential derivatives", _check_potential_derivatives),
)


def run_selftest(print_fn=print):
    """Run every check; returns True when all pass."""
    all_ok = True
    for name, check in CHECKS:
        try:
            failure = check()
        except Exception as err:  # a crashed check is a failed check
            failure = f"raised {type(err).__name__}: {err}"
        status = "PASS" if failure is None else "FAIL"
        if failure is not None:
            all_ok = False
            print_fn(f"[{status}] {name}: {failure}")
        else:
            print_fn(f"[{status}] {name}")
    return all_ok
