import math

import numpy as np
import pytest

from lyapsync.errors import KappaTooSmallError, WrongKindError
from lyapsync.potentials import make_potential
from lyapsync.theory import (RADIAL_SLOPE_MEAN, RADIAL_SLOPE_SQ,
                             SUM_INV_SQUARES_NONZERO, bound_report,
                             concentration_weights, degenerate_bound_constants,
                             degenerate_rate_bound, det_weight_point,
                             det_weight_sphere, first_order_rate,
                             laplace_first_order, nondegenerate_rate_bound,
                             sample_sphere_fluctuations, sphere_area,
                             sphere_gaussian_moments, zero_mean_mode_sum)


def _product_oracle_point(eigenvalues, kappa, m_trunc):
    """Raw truncated determinant product, by brute force, with integral tail."""
    modes = np.arange(1, m_trunc + 1, dtype=float)
    kw2 = kappa * (2.0 * np.pi * modes) ** 2
    log_product = math.log(float(np.prod(eigenvalues)))
    for lam in eigenvalues:
        log_product += 2.0 * float(np.log((kw2 + lam) / (kw2 + 1.0)).sum())
        # integral tail of (lam - 1)/(kappa (2 pi m)^2) over |m| > M
        log_product += (lam - 1.0) * 2.0 / (4.0 * math.pi**2 * kappa * m_trunc)
    return math.exp(-0.5 * log_product)


def test_theta_identity_hessian_is_one():
    quadratic = make_potential("quadratic_well", n=3, a=1.0)
    for kappa in (0.5, 1.0, 8.0):
        theta, residual = det_weight_point(quadratic, quadratic.minima[0], kappa)
        assert theta == pytest.approx(1.0, abs=1e-10)
        assert residual < 1e-10


def test_theta_double_well_against_large_product_oracle():
    well = make_potential("double_well")
    theta, _ = det_weight_point(well, well.minima[1], 1.0)
    oracle = _product_oracle_point([2.0], 1.0, 10**6)
    assert theta == pytest.approx(oracle, rel=1e-7)
    # symmetry: both wells carry identical Hessians
    other, _ = det_weight_point(well, well.minima[0], 1.0)
    assert other == theta


def test_theta_sphere_against_product_oracle():
    sombrero = make_potential("sombrero", n=2)
    kappa = 1.0
    m_trunc = 10**6
    modes = np.arange(1, m_trunc + 1, dtype=float)
    kw2 = kappa * (2.0 * np.pi * modes) ** 2
    log_product = math.log(2.0)
    log_product += 2.0 * float(np.log((kw2 + 2.0) / (kw2 + 1.0)).sum())
    log_product += 1.0 * 2.0 / (4.0 * math.pi**2 * kappa * m_trunc)
    # zero tangential eigenvalue contributes kappa w^2 / (kappa w^2 + 1) factors
    log_product += 2.0 * float(np.log(kw2 / (kw2 + 1.0)).sum())
    log_product += -1.0 * 2.0 / (4.0 * math.pi**2 * kappa * m_trunc)
    oracle = (2 * math.pi) ** (-0.5) * math.exp(-0.5 * log_product)
    theta, _ = det_weight_sphere(sombrero, 1.0, kappa)
    assert theta == pytest.approx(oracle, rel=1e-7)


def test_theta_sphere_large_kappa_limit():
    sombrero = make_potential("sombrero", n=3)
    theta, _ = det_weight_sphere(sombrero, 1.0, 1e7)
    limit = (2 * math.pi) ** (-1.0) * 2.0 ** (-0.5)
    assert theta == pytest.approx(limit, rel=1e-6)


def test_theta_stability_under_truncation_doubling():
    for potential in (make_potential("double_well"),
                      make_potential("asymmetric_double_well"),
                      make_potential("quadratic_well", n=2, a=1.0)):
        for kappa in (1.0, 8.0):
            for minimum in potential.minima:
                coarse, _ = det_weight_point(potential, minimum, kappa, 10_000)
                fine, _ = det_weight_point(potential, minimum, kappa, 20_000)
                assert abs(fine - coarse) <= 1e-8 * abs(coarse)
    for potential in (make_potential("sombrero", n=2),
                      make_potential("sombrero", n=3),
                      make_potential("sombrero", n=4),
                      make_potential("two_sphere", n=3)):
        for kappa in (1.0, 8.0):
            for radius in potential.radii:
                coarse, _ = det_weight_sphere(potential, radius, kappa, 10_000)
                fine, _ = det_weight_sphere(potential, radius, kappa, 20_000)
                assert abs(fine - coarse) <= 1e-8 * abs(coarse)


def test_weights_symmetric_double_well():
    well = make_potential("double_well")
    table = concentration_weights(well, 1.0)
    assert np.allclose(table.weights, [0.5, 0.5], atol=1e-14)
    assert table.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_weights_single_sphere_and_two_sphere():
    sombrero = make_potential("sombrero", n=3)
    table = concentration_weights(sombrero, 4.0)
    assert table.weights.tolist() == [1.0]
    two = make_potential("two_sphere", n=3)
    table2 = concentration_weights(two, 4.0)
    assert len(table2.weights) == 2
    assert table2.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert (table2.weights > 0).all()
    # both thetas enter: recompute the normalization by hand
    theta1, _ = det_weight_sphere(two, 1.0, 4.0)
    theta2, _ = det_weight_sphere(two, 2.0, 4.0)
    raw = np.array([sphere_area(3, 1.0) * theta1, sphere_area(3, 2.0) * theta2])
    assert np.allclose(table2.weights, raw / raw.sum(), atol=1e-14)


def test_sphere_area_half_integer_gamma_values():
    assert sphere_area(2, 1.0) == pytest.approx(2 * math.pi, rel=1e-12)
    assert sphere_area(3, 1.0) == pytest.approx(4 * math.pi, rel=1e-12)
    assert sphere_area(4, 1.0) == pytest.approx(2 * math.pi**2, rel=1e-12)
    assert sphere_area(5, 1.0) == pytest.approx(8 * math.pi**2 / 3, rel=1e-12)
    assert sphere_area(6, 1.0) == pytest.approx(math.pi**3, rel=1e-12)
    assert sphere_area(3, 2.0) == pytest.approx(16 * math.pi, rel=1e-12)


def test_nondegenerate_bound_symmetric_well():
    well = make_potential("double_well")
    assert nondegenerate_rate_bound(well, 1.0, eta=0.1) == pytest.approx(
        -1.9, abs=1e-12)


def test_nondegenerate_bound_single_well():
    quadratic = make_potential("quadratic_well", n=1, a=1.3)
    assert nondegenerate_rate_bound(quadratic, 2.0, eta=0.2) == pytest.approx(
        -1.1, abs=1e-12)


def test_nondegenerate_bound_asymmetric_composition():
    asym = make_potential("asymmetric_double_well")
    kappa = 2.0
    bound = nondegenerate_rate_bound(asym, kappa, eta=0.0)
    thetas = [det_weight_point(asym, m, kappa)[0] for m in asym.minima]
    weights = np.array(thetas) / sum(thetas)
    expected = -(weights * [2.0, 5.0]).sum()
    assert bound == pytest.approx(expected, rel=1e-12)
    with pytest.raises(WrongKindError):
        nondegenerate_rate_bound(make_potential("sombrero", n=2), 1.0)


def test_basel_constant():
    partial = 2.0 * (1.0 / np.arange(1, 2_000_001) ** 2).sum()
    assert SUM_INV_SQUARES_NONZERO == pytest.approx(partial, abs=1e-6)


def test_degenerate_constants():
    sombrero = make_potential("sombrero", n=3)
    c_max, kappa_min = degenerate_bound_constants(sombrero, 0.5)
    assert c_max == pytest.approx(0.5, abs=1e-12)
    assert kappa_min == pytest.approx(4.0, abs=1e-12)
    c_max_small, _ = degenerate_bound_constants(sombrero, 0.1)
    assert c_max_small == pytest.approx(1.0 / 6.0, abs=1e-12)
    # the alternative product reading of the viscosity floor
    _, kappa_product = degenerate_bound_constants(sombrero, 0.5,
                                                  kappa_rule="product")
    assert kappa_product == pytest.approx(4.0 * 0.25, abs=1e-12)


def test_degenerate_bound_closed_form():
    sombrero3 = make_potential("sombrero", n=3)
    bound = degenerate_rate_bound(sombrero3, 8.0, 0.5)
    assert bound.main_term == pytest.approx(-1.0, abs=1e-12)
    assert bound.error_term == pytest.approx(0.125, abs=1e-12)
    assert bound.total == pytest.approx(-0.875, abs=1e-12)
    sombrero4 = make_potential("sombrero", n=4)
    bound4 = degenerate_rate_bound(sombrero4, 8.0, 0.5)
    assert bound4.main_term == pytest.approx(-2.0, abs=1e-12)
    assert bound4.total == pytest.approx(-1.875, abs=1e-12)


def test_degenerate_bound_n2_main_term_vanishes():
    sombrero2 = make_potential("sombrero", n=2)
    bound = degenerate_rate_bound(sombrero2, 8.0, 0.5)
    assert bound.main_term == 0.0
    assert bound.total == bound.error_term > 0.0


def test_degenerate_bound_main_term_scales_with_dimension():
    mains = {}
    for n in (2, 3, 4):
        mains[n] = degenerate_rate_bound(make_potential("sombrero", n=n),
                                         8.0, 0.5).main_term
    assert mains[2] == 0.0
    assert mains[4] == pytest.approx(2.0 * mains[3], rel=1e-12)


def test_degenerate_bound_rejects_small_kappa():
    sombrero = make_potential("sombrero", n=3)
    with pytest.raises(KappaTooSmallError):
        degenerate_rate_bound(sombrero, 4.0, 0.5)


def test_gaussian_moments_closed_forms():
    sombrero = make_potential("sombrero", n=3)
    moments = sphere_gaussian_moments(sombrero, 1.0, 4.0)
    assert moments.var_tangent == 0.5
    assert moments.fourth_tangent == 0.75
    assert moments.fourth_tangent == 3.0 * moments.var_tangent**2


def test_perp_sum_monotone_and_bounded():
    sombrero = make_potential("sombrero", n=3)
    previous = np.inf
    for kappa in (1.0, 2.0, 4.0, 8.0, 16.0):
        perp = sphere_gaussian_moments(sombrero, 1.0, kappa).perp_sum
        assert perp < previous
        assert perp <= SUM_INV_SQUARES_NONZERO / (4 * math.pi**2 * kappa)
        previous = perp
    assert sphere_gaussian_moments(sombrero, 1.0, 1e9).perp_sum < 1e-9


def test_perp_sum_partial_sum_oracle():
    sombrero = make_potential("sombrero", n=3)
    kappa = 1.0
    k = np.arange(1, 100_001, dtype=float)
    oracle = 2.0 * (1.0 / (kappa * (2 * np.pi * k) ** 2 + 2.0)).sum()
    perp = sphere_gaussian_moments(sombrero, 1.0, kappa, m_trunc=100_000).perp_sum
    # module value includes the analytic tail on top of the partial sum
    assert perp == pytest.approx(oracle, abs=1e-6)
    assert perp > oracle


def test_first_order_rate_large_kappa_limit_and_monotonicity():
    for name, n in (("sombrero", 3), ("sombrero", 4), ("two_sphere", 3)):
        potential = make_potential(name, n=n)
        for radius in potential.radii:
            target = (n - 2.0) / radius**2
            previous = -np.inf
            for kappa in (4.1, 8.0, 16.0, 64.0, 1e6):
                value = first_order_rate(potential, radius, kappa, 0.5)
                assert value > previous
                previous = value
            assert previous == pytest.approx(target, abs=1e-5)


def test_first_order_rate_consistent_with_bound():
    # -sum_i p_i E_i <= main + error for kappa above the floor
    for name, n in (("sombrero", 3), ("two_sphere", 3)):
        potential = make_potential(name, n=n)
        for kappa in (4.5, 8.0, 16.0):
            table = concentration_weights(potential, kappa)
            rates = [first_order_rate(potential, r, kappa, 0.5)
                     for r in potential.radii]
            lhs = -float((table.weights * rates).sum())
            bound = degenerate_rate_bound(potential, kappa, 0.5)
            assert lhs <= bound.total + 1e-12


def test_zero_mean_mode_sum_closed_form():
    assert zero_mean_mode_sum(1.0) == pytest.approx(1.0 / 12.0, rel=1e-12)
    assert zero_mean_mode_sum(4.0) == pytest.approx(1.0 / 48.0, rel=1e-12)


def test_laplace_first_order_slope_sq_closed_form():
    sombrero = make_potential("sombrero", n=3)
    analytic, monte_carlo, stderr = laplace_first_order(
        sombrero, 1.0, 4.0, RADIAL_SLOPE_SQ, mc_samples=20_000, seed=1)
    moments = sphere_gaussian_moments(sombrero, 1.0, 4.0)
    assert analytic == pytest.approx(4.0 * (0.5 + moments.perp_sum), rel=1e-12)
    assert abs(analytic - monte_carlo) <= 3.0 * stderr


@pytest.mark.parametrize("kappa", [4.0, 8.0, 16.0])
def test_laplace_first_order_mc_agreement(kappa):
    for name in ("sombrero", "two_sphere"):
        potential = make_potential(name, n=3)
        for radius in potential.radii:
            for functional in (RADIAL_SLOPE_MEAN, RADIAL_SLOPE_SQ):
                analytic, monte_carlo, stderr = laplace_first_order(
                    potential, radius, kappa, functional, mc_samples=20_000,
                    seed=2)
                assert abs(analytic - monte_carlo) <= 3.0 * stderr, (
                    f"{name} r={radius} {functional} kappa={kappa}: "
                    f"{analytic} vs {monte_carlo} +- {stderr}")


def test_odd_moments_vanish():
    sombrero = make_potential("sombrero", n=3)
    rng = np.random.default_rng(11)
    t, fields = sample_sphere_fluctuations(sombrero, 1.0, 4.0, 40_000, rng,
                                           mc_modes=64, grid_size=256)
    e1v = t[:, np.newaxis] + fields[:, 0, :]
    cubes = t**3
    integral_cubes = (e1v**3).mean(axis=1)
    for sample in (cubes, integral_cubes):
        stderr = sample.std() / math.sqrt(sample.size)
        assert abs(sample.mean()) <= 3.0 * stderr


def test_c_star_default_is_an_upper_bound():
    # ||f||_2 / ||f'||_1 <= 1/2 over zero-mean periodic trigonometric fields
    rng = np.random.default_rng(12)
    grid = 512
    x = np.arange(grid) / grid
    worst = 0.0
    for _ in range(1000):
        field = np.zeros(grid)
        for m in range(1, 6):
            a, b = rng.standard_normal(2)
            field += a * np.cos(2 * np.pi * m * x) + b * np.sin(2 * np.pi * m * x)
        derivative = np.fft.ifft(
            2j * np.pi * np.fft.fftfreq(grid, 1 / grid) * np.fft.fft(field)).real
        ratio = (np.sqrt((field**2).mean()) / np.abs(derivative).mean())
        worst = max(worst, ratio)
    assert worst <= 0.5


def test_bound_report_bundles():
    sombrero = make_potential("sombrero", n=3)
    report = bound_report(sombrero, 8.0)
    assert report.bound_sphere is not None
    assert report.c_max == pytest.approx(0.5)
    assert report.first_order is not None
    assert report.bound_sphere.intro_display_main == pytest.approx(-0.5, abs=1e-12)
    well = make_potential("double_well")
    report2 = bound_report(well, 1.0)
    assert report2.bound_point is not None
    assert report2.c_max is None
