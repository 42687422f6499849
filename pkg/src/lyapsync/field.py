"""Periodic vector fields on the unit torus: storage, transforms, norms, heat flow.

A field is an n-component real function sampled on a uniform N-point grid,
``values[c, j] = u_c(j / N)``.  The spectral view uses the convention

    uhat(m) = (1/N) sum_j u(j/N) exp(-2 pi i m j / N),

so ``uhat(0)`` is the spatial average and Parseval reads
``(1/N) sum_j |u(x_j)|^2 = sum_m |uhat(m)|^2``.  Norms carry the continuum
weight dx = 1/N, so discrete values converge to their integral counterparts
as the grid is refined.  Derivatives are always spectral.
"""

import numpy as np

from .errors import SpectralSymmetryError

_SYMMETRY_TOL = 1e-12


def validate_grid_size(n_points):
    """Grid sizes are powers of two >= 8."""
    n_points = int(n_points)
    if n_points < 8 or (n_points & (n_points - 1)) != 0:
        raise ValueError(f"grid size must be a power of two >= 8, got {n_points}")
    return n_points


def mode_numbers(n_points):
    """Integer mode numbers m in FFT order: 0, 1, ..., N/2-1, -N/2, ..., -1."""
    return np.fft.fftfreq(n_points, d=1.0 / n_points)


def angular_wavenumbers_sq(n_points):
    """(2 pi m)^2 in FFT order; the symbol of -Laplacian on the unit torus."""
    return (2.0 * np.pi * mode_numbers(n_points)) ** 2


class GridSpec:
    """Uniform periodic grid on the unit torus."""

    __slots__ = ("n_points",)

    def __init__(self, n_points):
        self.n_points = validate_grid_size(n_points)

    @property
    def dx(self):
        return 1.0 / self.n_points

    @property
    def points(self):
        return np.arange(self.n_points) / self.n_points

    def __eq__(self, other):
        return isinstance(other, GridSpec) and other.n_points == self.n_points

    def __repr__(self):
        return f"GridSpec(n_points={self.n_points})"


class Field:
    """Immutable n-component field with a lazily cached spectral view."""

    __slots__ = ("values", "_spectral")

    def __init__(self, values):
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[np.newaxis, :]
        if values.ndim != 2:
            raise ValueError("field values must be a 1-d or 2-d array")
        validate_grid_size(values.shape[1])
        values.setflags(write=False)
        self.values = values
        self._spectral = None

    @classmethod
    def constant(cls, point, grid_size):
        """Spatially constant field u(x) = point."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return cls(np.repeat(point[:, np.newaxis], validate_grid_size(grid_size), axis=1))

    @classmethod
    def zero(cls, n_components, grid_size):
        return cls(np.zeros((n_components, validate_grid_size(grid_size))))

    @classmethod
    def from_spectral(cls, coefficients):
        """Rebuild a field from DFT coefficients; rejects non-symmetric input."""
        coefficients = np.asarray(coefficients, dtype=complex)
        if coefficients.ndim == 1:
            coefficients = coefficients[np.newaxis, :]
        n_points = coefficients.shape[1]
        validate_grid_size(n_points)
        mirrored = np.conj(coefficients[:, (-np.arange(n_points)) % n_points])
        scale = np.abs(coefficients).max()
        if scale > 0 and np.abs(coefficients - mirrored).max() > _SYMMETRY_TOL * max(scale, 1.0):
            raise SpectralSymmetryError(
                "coefficients are not conjugate-symmetric; corrupted spectral state"
            )
        values = np.fft.ifft(coefficients, axis=1).real * n_points
        field = cls(values)
        spectral = np.array(coefficients)
        spectral.setflags(write=False)
        field._spectral = spectral
        return field

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def grid_size(self):
        return self.values.shape[1]

    @property
    def grid(self):
        return GridSpec(self.grid_size)

    @property
    def spectral(self):
        if self._spectral is None:
            spectral = np.fft.fft(self.values, axis=1) / self.grid_size
            spectral.setflags(write=False)
            self._spectral = spectral
        return self._spectral

    def copy(self):
        return Field(self.values)

    def __repr__(self):
        return f"Field(n={self.n}, N={self.grid_size})"


def dft(field):
    """Forward transform; uhat(0) equals the spatial average."""
    return field.spectral


def idft(coefficients):
    """Inverse of :func:`dft`; raises on non-conjugate-symmetric input."""
    return Field.from_spectral(coefficients)


def l2_norm(field):
    """Continuum L2 norm: (int |u(x)|^2 dx)^(1/2) with dx = 1/N."""
    values = field.values if isinstance(field, Field) else np.asarray(field)
    return float(np.sqrt((values * values).sum() / values.shape[-1]))


def sup_norm(field):
    """Max over grid points of the Euclidean norm |u(x)| in R^n."""
    values = field.values if isinstance(field, Field) else np.asarray(field)
    return float(np.sqrt((values * values).sum(axis=-2).max()))


def h1_seminorm(field, kappa):
    """(kappa sum_m (2 pi m)^2 |uhat(m)|^2)^(1/2)."""
    coefficients = field.spectral
    w2 = angular_wavenumbers_sq(field.grid_size)
    return float(np.sqrt(kappa * (w2 * (coefficients.real**2 + coefficients.imag**2)).sum()))


def heat_semigroup(field, kappa, t):
    """Heat flow exp(kappa t Laplacian): multiplies mode m by exp(-kappa (2 pi m)^2 t)."""
    if t < 0:
        raise ValueError(f"heat semigroup requires t >= 0, got {t}")
    damping = np.exp(-kappa * angular_wavenumbers_sq(field.grid_size) * t)
    return Field.from_spectral(field.spectral * damping)
