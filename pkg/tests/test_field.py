import numpy as np
import pytest

from lyapsync.errors import SpectralSymmetryError
from lyapsync.field import (Field, GridSpec, dft, h1_seminorm, heat_semigroup,
                            idft, l2_norm, mode_numbers, sup_norm,
                            validate_grid_size)


def test_grid_spec_rejects_bad_sizes():
    for bad in (0, 7, 12, 100):
        with pytest.raises(ValueError):
            GridSpec(bad)
    assert GridSpec(8).dx * 8 == 1.0


def test_constant_field_transform():
    field = Field.constant([3.0], 64)
    coefficients = dft(field)
    assert coefficients[0, 0] == pytest.approx(3.0, abs=1e-14)
    assert np.abs(coefficients[0, 1:]).max() < 1e-14


def test_cosine_single_mode():
    x = np.arange(128) / 128
    field = Field(np.cos(2 * np.pi * x))
    coefficients = dft(field)
    index = {int(m): i for i, m in enumerate(mode_numbers(128))}
    assert coefficients[0, index[1]] == pytest.approx(0.5, abs=1e-14)
    assert coefficients[0, index[-1]] == pytest.approx(0.5, abs=1e-14)
    others = np.delete(np.abs(coefficients[0]), [index[1], index[-1]])
    assert others.max() < 1e-14


def test_idft_trivial_modes():
    coefficients = np.zeros((1, 64), dtype=complex)
    coefficients[0, 0] = 1.0
    assert np.allclose(idft(coefficients).values, 1.0, atol=1e-14)
    coefficients = np.zeros((1, 64), dtype=complex)
    coefficients[0, 1] = 0.5
    coefficients[0, -1] = 0.5
    x = np.arange(64) / 64
    assert np.allclose(idft(coefficients).values[0], np.cos(2 * np.pi * x), atol=1e-13)


def test_idft_rejects_asymmetric_input():
    coefficients = np.zeros((1, 32), dtype=complex)
    coefficients[0, 3] = 1.0  # no matching conjugate at -3
    with pytest.raises(SpectralSymmetryError):
        idft(coefficients)


def test_round_trip_many_random_fields():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 5))
        n_points = int(2 ** rng.integers(3, 11))
        values = rng.standard_normal((n, n_points)) * 10 ** rng.uniform(-2, 2)
        field = Field(values)
        back = idft(dft(field))
        scale = max(1.0, np.abs(values).max())
        assert np.abs(back.values - values).max() <= 1e-12 * scale


def test_parseval_identity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n_points = int(2 ** rng.integers(3, 10))
        values = rng.standard_normal((3, n_points))
        # both sides computed independently of each other
        physical = (values**2).sum() / n_points
        spectral = (np.abs(np.fft.fft(values, axis=1) / n_points) ** 2).sum()
        assert abs(physical - spectral) <= 1e-12 * max(physical, 1.0)
        assert l2_norm(Field(values)) == pytest.approx(np.sqrt(physical), rel=1e-13)


def test_norms_constant_vector_field():
    field = Field.constant([3.0, 4.0], 32)
    assert l2_norm(field) == pytest.approx(5.0, abs=1e-14)
    assert sup_norm(field) == pytest.approx(5.0, abs=1e-14)


def test_norms_zero_field():
    zero = Field.zero(2, 16)
    assert l2_norm(zero) == 0.0
    assert sup_norm(zero) == 0.0
    assert h1_seminorm(zero, 1.0) == 0.0


def test_h1_seminorm_cosine():
    x = np.arange(256) / 256
    field = Field(np.cos(2 * np.pi * x))
    # analytic: kappa * integral (2 pi sin)^2 = 2 pi^2, root = pi sqrt(2)
    assert h1_seminorm(field, 1.0) == pytest.approx(np.pi * np.sqrt(2.0), rel=1e-12)


def test_sup_norm_dominates_l2():
    rng = np.random.default_rng(5)
    for _ in range(100):
        field = Field(rng.standard_normal((2, 64)))
        assert sup_norm(field) >= l2_norm(field) - 1e-14


def test_heat_semigroup_identity_and_constant():
    rng = np.random.default_rng(3)
    field = Field(rng.standard_normal((2, 64)))
    assert np.allclose(heat_semigroup(field, 2.0, 0.0).values, field.values,
                       atol=1e-14)
    constant = Field.constant([1.0, -2.0], 64)
    assert np.allclose(heat_semigroup(constant, 2.0, 5.0).values,
                       constant.values, atol=1e-13)


def test_heat_semigroup_cosine_decay():
    x = np.arange(128) / 128
    field = Field(np.cos(2 * np.pi * x))
    flowed = heat_semigroup(field, 1.0, 0.1)
    expected = np.exp(-4 * np.pi**2 * 0.1) * np.cos(2 * np.pi * x)
    assert np.abs(flowed.values[0] - expected).max() < 1e-14


def test_heat_semigroup_rejects_negative_time():
    with pytest.raises(ValueError):
        heat_semigroup(Field.zero(1, 16), 1.0, -0.1)


def test_heat_semigroup_composition_law():
    rng = np.random.default_rng(11)
    for _ in range(50):
        field = Field(rng.standard_normal((2, 128)))
        s, t = rng.uniform(0.0, 0.5, 2)
        once = heat_semigroup(field, 1.7, s + t)
        twice = heat_semigroup(heat_semigroup(field, 1.7, s), 1.7, t)
        assert np.abs(once.values - twice.values).max() <= 1e-12


def test_field_values_immutable():
    field = Field.zero(1, 16)
    with pytest.raises(ValueError):
        field.values[0, 0] = 1.0


def test_grid_size_validator_returns_int():
    assert validate_grid_size(16) == 16
    assert isinstance(validate_grid_size(16), int)
