"""Closed-form Gibbs concentration weights and decay-rate bounds.

For a point minimum w with Hessian eigenvalues lam_j the determinant weight
is

    theta(w) = [ det(hess V(w)) prod_{m != 0} prod_j
                 (kappa (2 pi m)^2 + lam_j) / (kappa (2 pi m)^2 + 1) ]^(-1/2),

and for a sphere of radius r of a rotation-invariant potential, with
a = 4 g''(r^2) r^2 the curvature normal to the sphere,

    theta(r) = (2 pi)^(-(n-1)/2) [ a prod_{m != 0}
                ((kappa w^2 + a) / (kappa w^2 + 1))
                ((kappa w^2) / (kappa w^2 + 1))^(n-1) ]^(-1/2),

the tangential directions contributing the flat (2 pi) factor and the
zero-eigenvalue mode factors.  Infinite products are evaluated as
compensated log sums truncated at m_trunc with an analytic tail from the
trigamma function; the residual of the tail approximation is tracked.

Weights p_i normalize theta (point case) or |S^{n-1}_{r_i}| theta (sphere
case).  The rate bounds assembled here are leading order as the noise
intensity vanishes: the point-minima bound -sum lambda_min(w_i) p_i + eta,
and the sphere bound with main term -(n-2) sum p_i / r_i^2 plus an error
term (c_max / kappa) sum p_i 4 g''(r_i^2), valid for kappa above an
explicit threshold.
"""

import math

import numpy as np
from scipy.special import polygamma

from .errors import DegenerateHessianError, KappaTooSmallError, WrongKindError
from .potentials import NONDEGENERATE, ROTATION_INVARIANT

# sum_{k != 0} 1/k^2 over the nonzero integers
SUM_INV_SQUARES_NONZERO = math.pi * math.pi / 3.0

KAPPA_RULE_MAX = "max"
KAPPA_RULE_PRODUCT = "product"


def _trigamma(x):
    return float(polygamma(1, x))


def _mode_log_sum(eigenvalues, kappa, m_trunc):
    """sum over 0 < |m| <= m_trunc and j of log((k w^2 + lam_j)/(k w^2 + 1)),
    plus the analytic tail for |m| > m_trunc.

    Returns (log_sum, residual_bound): the tail replaces log(1 + x_m) by
    (lam - 1)/(kappa (2 pi m)^2) summed via the trigamma function; the
    bound covers both the log linearization and the +1 shift.
    """
    m_trunc = int(m_trunc)
    modes = np.arange(1, m_trunc + 1, dtype=float)
    kw2 = kappa * (2.0 * np.pi * modes) ** 2
    pieces = []
    for lam in eigenvalues:
        pieces.append(np.log1p((lam - 1.0) / (kw2 + 1.0)))
    # extended-precision accumulation: ~1e4 near-cancelling terms per factor
    one_sided = float(np.concatenate(pieces).sum(dtype=np.longdouble))
    tail_scale = 2.0 / (4.0 * math.pi * math.pi * kappa) * _trigamma(m_trunc + 1)
    tail = sum(lam - 1.0 for lam in eigenvalues) * tail_scale
    c = 4.0 * math.pi * math.pi * kappa
    cubic_tail = 2.0 / (3.0 * m_trunc**3)
    residual = sum(((lam - 1.0) ** 2 / 2.0 + abs(lam - 1.0)) / (c * c)
                   for lam in eigenvalues) * cubic_tail
    return 2.0 * one_sided + tail, residual


def det_weight_point(potential, minimum, kappa, m_trunc=10_000):
    """theta at a non-degenerate point minimum."""
    hessian = potential.hessian(minimum.location)
    eigenvalues = np.linalg.eigvalsh(hessian)
    det0 = float(np.prod(eigenvalues))
    if det0 < 1e-12:
        raise DegenerateHessianError(
            f"Hessian determinant {det0:.3g} at {minimum.location} is singular")
    log_sum, residual = _mode_log_sum(eigenvalues, kappa, m_trunc)
    theta = math.exp(-0.5 * (math.log(det0) + log_sum))
    return theta, residual


def det_weight_sphere(potential, radius, kappa, m_trunc=10_000):
    """theta at radius r of a rotation-invariant potential."""
    if potential.kind != ROTATION_INVARIANT:
        raise WrongKindError("sphere weights need a rotation-invariant potential")
    curvature = potential.normal_curvature(radius)
    if curvature < 1e-12:
        raise DegenerateHessianError(f"normal curvature {curvature:.3g} at r={radius}")
    n = potential.n
    eigenvalues = [curvature] + [0.0] * (n - 1)
    log_sum, residual = _mode_log_sum(eigenvalues, kappa, m_trunc)
    theta = ((2.0 * math.pi) ** (-0.5 * (n - 1))
             * math.exp(-0.5 * (math.log(curvature) + log_sum)))
    return theta, residual


def sphere_area(n, radius):
    """Surface area of the sphere of radius r in R^n: 2 pi^(n/2) r^(n-1) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) * radius ** (n - 1) / math.gamma(n / 2.0)


class WeightTable:
    """Per-minimum determinant weights and their normalized masses."""

    def __init__(self, labels, thetas, weights, residual_bound):
        self.labels = list(labels)
        self.thetas = np.asarray(thetas)
        self.weights = np.asarray(weights)
        self.residual_bound = float(residual_bound)


def concentration_weights(potential, kappa, m_trunc=10_000):
    """Normalized masses p_i the invariant measure gives each minimum/sphere."""
    labels, thetas, raw, residuals = [], [], [], []
    if potential.kind == NONDEGENERATE:
        for minimum in potential.minima:
            theta, residual = det_weight_point(potential, minimum, kappa, m_trunc)
            labels.append("w=" + ",".join(f"{x:g}" for x in minimum.location))
            thetas.append(theta)
            raw.append(theta)
            residuals.append(residual)
    elif potential.kind == ROTATION_INVARIANT:
        for radius in potential.radii:
            theta, residual = det_weight_sphere(potential, radius, kappa, m_trunc)
            labels.append(f"r={radius:g}")
            thetas.append(theta)
            raw.append(theta * sphere_area(potential.n, radius))
            residuals.append(residual)
    else:
        raise WrongKindError(f"no weights for potential kind {potential.kind!r}")
    raw = np.asarray(raw)
    return WeightTable(labels, thetas, raw / raw.sum(), max(residuals))


def nondegenerate_rate_bound(potential, kappa, eta=0.0, m_trunc=10_000):
    """-sum_i lambda_min(w_i) p_i + eta."""
    if potential.kind != NONDEGENERATE:
        raise WrongKindError("point-minima bound needs a non-degenerate potential")
    table = concentration_weights(potential, kappa, m_trunc)
    lambda_mins = np.array([m.lambda_min for m in potential.minima])
    return float(-(lambda_mins * table.weights).sum() + eta)


def degenerate_bound_constants(potential, c_star=0.5, kappa_rule=KAPPA_RULE_MAX):
    """(c_max, kappa_min) for the sphere bound.

    c_max = 2 max(sum_{k != 0} k^-2 / (4 pi^2), c_star^2); the first
    alternative equals 1/12 exactly.  The viscosity threshold combines 4
    with max_i g''(r_i^2) r_i^2 c_max, either as a maximum (default) or as
    a product (the alternative reading, selectable via kappa_rule).
    """
    if potential.kind != ROTATION_INVARIANT:
        raise WrongKindError("sphere-bound constants need a rotation-invariant potential")
    c_max = 2.0 * max(SUM_INV_SQUARES_NONZERO / (4.0 * math.pi * math.pi),
                      c_star * c_star)
    scaled = max(float(potential.g2(r * r)) * r * r * c_max for r in potential.radii)
    if kappa_rule == KAPPA_RULE_MAX:
        kappa_min = max(4.0, scaled)
    elif kappa_rule == KAPPA_RULE_PRODUCT:
        kappa_min = 4.0 * scaled
    else:
        raise ValueError(f"kappa_rule must be '{KAPPA_RULE_MAX}' or '{KAPPA_RULE_PRODUCT}'")
    return c_max, kappa_min


class DegenerateBound:
    """Sphere-case rate bound split into main and error terms."""

    def __init__(self, main_term, error_term, c_max, kappa_min, weights,
                 intro_display_main):
        self.main_term = float(main_term)
        self.error_term = float(error_term)
        self.total = self.main_term + self.error_term
        self.c_max = c_max
        self.kappa_min = kappa_min
        self.weights = weights
        # Alternative display with coefficient -(n - 5/2); derived form only,
        # kept because it differs from the -(n - 2) main term computed here.
        self.intro_display_main = float(intro_display_main)
        # The dropped remainder is first order in the noise intensity.
        self.remainder_note = "O(epsilon)"


def degenerate_rate_bound(potential, kappa, c_star=0.5, m_trunc=10_000,
                          kappa_rule=KAPPA_RULE_MAX):
    """Leading-order bound on (rescaled) top exponent for sphere minima.

    main = -(n-2) sum_i p_i / r_i^2,
    error = (c_max / kappa) sum_i p_i 4 g''(r_i^2),
    requiring kappa > kappa_min.
    """
    c_max, kappa_min = degenerate_bound_constants(potential, c_star, kappa_rule)
    if kappa <= kappa_min:
        raise KappaTooSmallError(kappa, kappa_min)
    table = concentration_weights(potential, kappa, m_trunc)
    radii = np.asarray(potential.radii)
    curvatures = np.array([float(potential.g2(r * r)) for r in potential.radii])
    n = potential.n
    main = -(n - 2.0) * float((table.weights / radii**2).sum())
    error = (c_max / kappa) * float((table.weights * 4.0 * curvatures).sum())
    intro_display = -(n - 2.5) * float((table.weights / radii**2).sum())
    return DegenerateBound(main, error, c_max, kappa_min, table, intro_display)


class GaussianMoments:
    """Moments of the fluctuation Gaussian around a sphere minimum."""

    __slots__ = ("var_tangent", "fourth_tangent", "perp_sum")

    def __init__(self, var_tangent, fourth_tangent, perp_sum):
        self.var_tangent = float(var_tangent)
        self.fourth_tangent = float(fourth_tangent)
        self.perp_sum = float(perp_sum)


def sphere_gaussian_moments(potential, radius, kappa, m_trunc=100_000):
    """var = 1/(4 g'' r^2), fourth = 3 var^2, and
    perp_sum = sum_{k != 0} 1/(kappa (2 pi k)^2 + 4 g'' r^2)."""
    if potential.kind != ROTATION_INVARIANT:
        raise WrongKindError("sphere moments need a rotation-invariant potential")
    curvature = potential.normal_curvature(radius)
    var_tangent = 1.0 / curvature
    modes = np.arange(1, int(m_trunc) + 1, dtype=float)
    partial = float((1.0 / (kappa * (2.0 * np.pi * modes) ** 2 + curvature)).sum())
    tail = _trigamma(m_trunc + 1) / (4.0 * math.pi * math.pi * kappa)
    perp_sum = 2.0 * partial + 2.0 * tail
    return GaussianMoments(var_tangent, 3.0 * var_tangent**2, perp_sum)


def zero_mean_mode_sum(kappa):
    """sum_{k != 0} 1/(kappa (2 pi k)^2) = 1/(12 kappa), exactly."""
    return SUM_INV_SQUARES_NONZERO / (4.0 * math.pi * math.pi * kappa)


def first_order_rate(potential, radius, kappa, c_star=0.5, m_trunc=100_000):
    """Per-sphere first-order decay coefficient

        (n-2)/r^2 - (2 g'' + (c_star^2/kappa) 16 g''^2 r^2) perp_sum
                  - (c_star^2/kappa) 4 g''.
    """
    if potential.kind != ROTATION_INVARIANT:
        raise WrongKindError("first-order rate needs a rotation-invariant potential")
    n = potential.n
    g2 = float(potential.g2(radius * radius))
    moments = sphere_gaussian_moments(potential, radius, kappa, m_trunc)
    ratio = c_star * c_star / kappa
    return ((n - 2.0) / radius**2
            - (2.0 * g2 + ratio * 16.0 * g2 * g2 * radius**2) * moments.perp_sum
            - ratio * 4.0 * g2)


# -- first-order Laplace coefficients with Monte Carlo validation ----------

RADIAL_SLOPE_MEAN = "radial_slope_mean"   # functional 2 int g'(|u|^2) dx
RADIAL_SLOPE_SQ = "radial_slope_sq"       # functional 4 ||g'(|u|^2)||_2^2

_FUNCTIONAL_ALIASES = {
    "radial_slope_mean": RADIAL_SLOPE_MEAN, "f1": RADIAL_SLOPE_MEAN,
    "radial_slope_sq": RADIAL_SLOPE_SQ, "f2": RADIAL_SLOPE_SQ,
}


def _analytic_first_order(potential, radius, kappa, functional, m_trunc):
    """Moment-composed closed form of the first-order coefficient.

    Uses independence of the constant normal coordinate t from the
    zero-mean fluctuation and the vanishing of odd Gaussian moments.  With
    tau = E t^2, P = E ||e1.v_perp||^2 and P0 the per-component zero-mean
    mode sum, the mean-slope functional reduces to

      4 g''' r^2 (tau + P) + 2 g'' (tau + P + (n-1) P0) + 4 g'' (n-1) tau
      - (16/3) g''' g'' r^4 (3 tau^2 + 3 tau P)
      - 8 g''^2 r^2 (3 tau^2 + tau (P + (n-1) P0) + 2 tau P)

    and the squared-slope functional to 16 g''^2 r^2 (tau + P).
    """
    n = potential.n
    s = radius * radius
    g2 = float(potential.g2(s))
    g3 = float(potential.g3(s))
    moments = sphere_gaussian_moments(potential, radius, kappa, m_trunc)
    tau = moments.var_tangent
    perp = moments.perp_sum
    perp0 = zero_mean_mode_sum(kappa)
    if functional == RADIAL_SLOPE_SQ:
        return 16.0 * g2 * g2 * s * (tau + perp)
    return (4.0 * g3 * s * (tau + perp)
            + 2.0 * g2 * (tau + perp + (n - 1) * perp0)
            + 4.0 * g2 * (n - 1) * tau
            - (16.0 / 3.0) * g3 * g2 * s * s * (3.0 * tau * tau + 3.0 * tau * perp)
            - 8.0 * g2 * g2 * s * (3.0 * tau * tau + tau * (perp + (n - 1) * perp0)
                                   + 2.0 * tau * perp))


def sample_sphere_fluctuations(potential, radius, kappa, count, rng,
                               mc_modes=256, grid_size=1024):
    """Draw (t, v_perp) from the fluctuation Gaussian around r e1.

    t is the constant coordinate along e1 with variance 1/(4 g'' r^2);
    v_perp collects zero-mean modes with per-mode variance
    1/(kappa w^2 + 4 g'' r^2) for the e1 component and 1/(kappa w^2) for
    the others, conjugate-symmetrized.  Returns (t, fields) with fields of
    shape (count, n, grid_size); grid_size > 3 mc_modes keeps the cubic
    integrands alias-free.
    """
    n = potential.n
    curvature = potential.normal_curvature(radius)
    t = rng.standard_normal(count) * math.sqrt(1.0 / curvature)
    modes = np.arange(1, mc_modes + 1, dtype=float)
    kw2 = kappa * (2.0 * np.pi * modes) ** 2
    var_e1 = 1.0 / (kw2 + curvature)
    var_other = 1.0 / kw2
    scale = np.empty((n, mc_modes))
    scale[0] = np.sqrt(var_e1 / 2.0)
    scale[1:] = np.sqrt(var_other / 2.0)
    draw = (rng.standard_normal((count, n, mc_modes))
            + 1j * rng.standard_normal((count, n, mc_modes))) * scale
    half_spectrum = np.zeros((count, n, grid_size // 2 + 1), dtype=complex)
    half_spectrum[:, :, 1:mc_modes + 1] = draw
    fields = np.fft.irfft(half_spectrum, n=grid_size, axis=2) * grid_size
    return t, fields


def _mc_first_order(potential, radius, kappa, functional, samples, mc_modes,
                    seed):
    n = potential.n
    s = radius * radius
    g2 = float(potential.g2(s))
    g3 = float(potential.g3(s))
    curvature = potential.normal_curvature(radius)
    grid_size = 4 * mc_modes
    total = 0.0
    total_sq = 0.0
    done = 0
    block_index = 0
    while done < samples:
        block = min(8192, samples - done)
        rng = np.random.default_rng(np.random.SeedSequence([seed, block_index]))
        if functional == RADIAL_SLOPE_SQ:
            # ||e1.v||_2^2 = t^2 + sum_{k != 0} |vhat_1(k)|^2: no grid needed
            t = rng.standard_normal(block) * math.sqrt(1.0 / curvature)
            modes = np.arange(1, mc_modes + 1, dtype=float)
            var_e1 = 1.0 / (kappa * (2.0 * np.pi * modes) ** 2 + curvature)
            draw = ((rng.standard_normal((block, mc_modes))
                     + 1j * rng.standard_normal((block, mc_modes)))
                    * np.sqrt(var_e1 / 2.0))
            norm_sq = t * t + 2.0 * (draw.real**2 + draw.imag**2).sum(axis=1)
            values = 16.0 * g2 * g2 * s * norm_sq
        else:
            t, fields = sample_sphere_fluctuations(potential, radius, kappa,
                                                   block, rng, mc_modes, grid_size)
            e1v = t[:, np.newaxis] + fields[:, 0, :]
            norm_sq = e1v * e1v + (fields[:, 1:, :] ** 2).sum(axis=1)
            values = (4.0 * g3 * s * (e1v * e1v).mean(axis=1)
                      + 2.0 * g2 * norm_sq.mean(axis=1)
                      + 4.0 * g2 * (n - 1) * t * t
                      - (16.0 / 3.0) * g3 * g2 * s * s * t * (e1v**3).mean(axis=1)
                      - 8.0 * g2 * g2 * s * t * (e1v * norm_sq).mean(axis=1))
        total += float(values.sum())
        total_sq += float((values * values).sum())
        done += block
        block_index += 1
    mean = total / samples
    variance = max(total_sq / samples - mean * mean, 0.0)
    return mean, math.sqrt(variance / samples)


def laplace_first_order(potential, radius, kappa, functional=RADIAL_SLOPE_MEAN,
                        m_trunc=100_000, mc_samples=100_000, mc_modes=256,
                        seed=0):
    """First-order coefficient of a functional's Gibbs average around a sphere.

    Returns (analytic, monte_carlo, stderr): the moment-composed closed
    form next to a direct Gaussian Monte Carlo average of the expansion
    integrand, the brute-force validation of the closed form.
    """
    key = _FUNCTIONAL_ALIASES.get(str(functional).lower())
    if key is None:
        raise ValueError(f"unknown functional {functional!r}; "
                         f"use {RADIAL_SLOPE_MEAN!r} or {RADIAL_SLOPE_SQ!r}")
    if potential.kind != ROTATION_INVARIANT:
        raise WrongKindError("Laplace coefficients need a rotation-invariant potential")
    analytic = _analytic_first_order(potential, radius, kappa, key, m_trunc)
    monte_carlo, stderr = _mc_first_order(potential, radius, kappa, key,
                                          int(mc_samples), int(mc_modes), seed)
    return analytic, monte_carlo, stderr


class TheoryBound:
    """Everything the `bound` command reports, in one bundle."""

    def __init__(self, potential, kappa, c_star, eta, m_trunc, kappa_rule):
        self.potential_name = potential.name
        self.kind = potential.kind
        self.n = potential.n
        self.kappa = kappa
        self.c_star = c_star
        self.eta = eta
        self.m_trunc = m_trunc
        self.table = concentration_weights(potential, kappa, m_trunc)
        self.c_max = None
        self.kappa_min = None
        self.first_order = None
        self.bound_point = None
        self.bound_sphere = None
        if potential.kind == NONDEGENERATE:
            self.rate_terms = [m.lambda_min for m in potential.minima]
            self.bound_point = nondegenerate_rate_bound(potential, kappa, eta, m_trunc)
        else:
            self.c_max, self.kappa_min = degenerate_bound_constants(
                potential, c_star, kappa_rule)
            self.rate_terms = [(potential.n - 2.0) / (r * r) for r in potential.radii]
            self.first_order = [first_order_rate(potential, r, kappa, c_star)
                                for r in potential.radii]
            if kappa > self.kappa_min:
                self.bound_sphere = degenerate_rate_bound(
                    potential, kappa, c_star, m_trunc, kappa_rule)


def bound_report(potential, kappa, c_star=0.5, eta=0.0, m_trunc=10_000,
                 kappa_rule=KAPPA_RULE_MAX):
    return TheoryBound(potential, kappa, c_star, eta, m_trunc, kappa_rule)
