"""Reaction potentials V: R^n -> R>=0 with analytic derivatives and minima metadata.

Two kinds are supported.  Point-minima potentials declare a finite list of
non-degenerate minima w_i with the smallest Hessian eigenvalue at each.
Rotationally invariant potentials are V(u) = g(|u|^2) for a polynomial radial
profile g, with minima on spheres of declared radii r_i where g(r^2) = 0,
g'(r^2) = 0 and g''(r^2) > 0; in that case

    grad V(z) = 2 g'(|z|^2) z,
    hess V(z) = 4 g''(|z|^2) z (x) z + 2 g'(|z|^2) Id.

The drift used by the integrators is b(u) = -grad V(u); integrators never
evaluate V itself.  Grid evaluations broadcast over leading axes, with the
component axis at -2 and the spatial axis at -1.
"""

import numpy as np
from numpy.polynomial import Polynomial

NONDEGENERATE = "nondegenerate"
ROTATION_INVARIANT = "rotation_invariant"

_MINIMUM_GRAD_TOL = 1e-10


class Minimum:
    """A declared non-degenerate minimum of V."""

    __slots__ = ("location", "lambda_min")

    def __init__(self, location, lambda_min):
        self.location = np.atleast_1d(np.asarray(location, dtype=float))
        self.lambda_min = float(lambda_min)

    def __repr__(self):
        return f"Minimum({self.location.tolist()}, lambda_min={self.lambda_min:g})"


class Potential:
    """Base class; concrete potentials implement value/gradient/hessian."""

    kind = None

    def __init__(self, name, n, growth_exponent, coercivity_constant,
                 hessian_floor_radius=None):
        self.name = name
        self.n = int(n)
        # Exponent p and constant C of the sampled coercivity check
        # -grad V(u).u <= -|u|^(2p) + C on |u| <= 10; diagnostics only.
        self.growth_exponent = float(growth_exponent)
        self.coercivity_constant = float(coercivity_constant)
        # Smallest R with hess V(u) >= Id for |u| >= R, where available.
        self.hessian_floor_radius = hessian_floor_radius

    # -- point evaluations ------------------------------------------------
    def value(self, z):
        raise NotImplementedError

    def gradient(self, z):
        raise NotImplementedError

    def hessian(self, z):
        raise NotImplementedError

    # -- grid evaluations (component axis -2, spatial axis -1) ------------
    def value_grid(self, values):
        raise NotImplementedError

    def gradient_grid(self, values):
        raise NotImplementedError

    def hessian_apply_grid(self, values, direction):
        """Pointwise hess V(u(x)) h(x)."""
        raise NotImplementedError

    def hessian_eigen_range_grid(self, values):
        """Per-point (smallest, largest) Hessian eigenvalue along the grid."""
        raise NotImplementedError

    def drift_grid(self, values):
        """b(u) = -grad V(u), vectorized along the grid."""
        return -self.gradient_grid(values)

    def minima_distance_sup(self, values):
        """Sup-norm distance from the sampled field to the set of minima."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, n={self.n})"


class NonDegeneratePotential(Potential):
    """Potential with finitely many declared non-degenerate minima."""

    kind = NONDEGENERATE

    def __init__(self, name, n, minima, growth_exponent, coercivity_constant,
                 hessian_floor_radius=None):
        super().__init__(name, n, growth_exponent, coercivity_constant,
                         hessian_floor_radius)
        self.minima = tuple(minima)
        for minimum in self.minima:
            if abs(self.value(minimum.location)) > 1e-10:
                raise ValueError(f"{name}: V({minimum.location}) != 0")
            if np.abs(self.gradient(minimum.location)).max() > _MINIMUM_GRAD_TOL:
                raise ValueError(f"{name}: grad V != 0 at declared minimum")

    def minima_distance_sup(self, values):
        # distance to the set of constant minimizers: min_i sup_x |u(x) - w_i|
        best = np.inf
        for minimum in self.minima:
            delta = values - minimum.location[:, np.newaxis]
            best = min(best, float(np.sqrt((delta * delta).sum(axis=-2).max())))
        return best

    def nearest_minimum_index(self, values):
        distances = []
        for minimum in self.minima:
            delta = values - minimum.location[:, np.newaxis]
            distances.append(float(np.sqrt((delta * delta).sum(axis=-2).max())))
        return int(np.argmin(distances))


class ScalarPolynomialPotential(NonDegeneratePotential):
    """Scalar (n = 1) polynomial potential."""

    def __init__(self, name, poly, minima, growth_exponent, coercivity_constant,
                 hessian_floor_radius=None):
        self.poly = poly
        self.dpoly = poly.deriv()
        self.ddpoly = self.dpoly.deriv()
        super().__init__(name, 1, minima, growth_exponent, coercivity_constant,
                         hessian_floor_radius)

    def value(self, z):
        return float(self.poly(np.asarray(z).reshape(-1)[0]))

    def gradient(self, z):
        return np.array([self.dpoly(np.asarray(z).reshape(-1)[0])])

    def hessian(self, z):
        return np.array([[self.ddpoly(np.asarray(z).reshape(-1)[0])]])

    def value_grid(self, values):
        return self.poly(values[..., 0, :])

    def gradient_grid(self, values):
        return self.dpoly(values)

    def hessian_apply_grid(self, values, direction):
        return self.ddpoly(values) * direction

    def hessian_eigen_range_grid(self, values):
        curvature = self.ddpoly(values[..., 0, :])
        return curvature, curvature


class QuadraticWellPotential(NonDegeneratePotential):
    """V(u) = a |u|^2 / 2: unique minimum at the origin, hess V = a Id."""

    def __init__(self, n, a):
        if a <= 0:
            raise ValueError("quadratic well requires a > 0")
        self.a = float(a)
        coercivity = max(0.0, (1.0 - self.a)) * 100.0 + 1.0
        super().__init__("quadratic_well", n, [Minimum(np.zeros(n), self.a)],
                         growth_exponent=1.0, coercivity_constant=coercivity,
                         hessian_floor_radius=0.0 if self.a >= 1 else None)

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return float(0.5 * self.a * (z * z).sum())

    def gradient(self, z):
        return self.a * np.asarray(z, dtype=float)

    def hessian(self, z):
        return self.a * np.eye(self.n)

    def value_grid(self, values):
        return 0.5 * self.a * (values * values).sum(axis=-2)

    def gradient_grid(self, values):
        return self.a * values

    def hessian_apply_grid(self, values, direction):
        return self.a * direction

    def hessian_eigen_range_grid(self, values):
        curvature = np.full(values.shape[:-2] + values.shape[-1:], self.a)
        return curvature, curvature


class FreePotential(NonDegeneratePotential):
    """V = 0, b = 0; pure heat dynamics (not a catalog entry)."""

    def __init__(self, n):
        Potential.__init__(self, "free", n, growth_exponent=1.0,
                           coercivity_constant=np.inf)
        self.minima = ()

    def value(self, z):
        return 0.0

    def gradient(self, z):
        return np.zeros(self.n)

    def hessian(self, z):
        return np.zeros((self.n, self.n))

    def value_grid(self, values):
        return np.zeros(values.shape[:-2] + values.shape[-1:])

    def gradient_grid(self, values):
        return np.zeros_like(values)

    def hessian_apply_grid(self, values, direction):
        return np.zeros_like(direction)

    def hessian_eigen_range_grid(self, values):
        zeros = np.zeros(values.shape[:-2] + values.shape[-1:])
        return zeros, zeros

    def minima_distance_sup(self, values):
        return np.nan


class RotationInvariantPotential(Potential):
    """V(u) = g(|u|^2) with minima on spheres of the declared radii."""

    kind = ROTATION_INVARIANT

    def __init__(self, name, n, radial_poly, radii, growth_exponent,
                 coercivity_constant, hessian_floor_radius=None):
        if n < 2:
            raise ValueError("rotation-invariant potentials need n >= 2")
        super().__init__(name, n, growth_exponent, coercivity_constant,
                         hessian_floor_radius)
        self.g = radial_poly
        self.g1 = radial_poly.deriv()
        self.g2 = self.g1.deriv()
        self.g3 = self.g2.deriv()
        self.radii = tuple(float(r) for r in radii)
        for r in self.radii:
            s = r * r
            if abs(self.g(s)) > 1e-10 or abs(self.g1(s)) > _MINIMUM_GRAD_TOL:
                raise ValueError(f"{name}: radius {r} is not a critical zero of g")
            if self.g2(s) <= 0:
                raise ValueError(f"{name}: g''({s}) must be positive")

    def normal_curvature(self, radius):
        """Hessian eigenvalue normal to the sphere of this radius: 4 g''(r^2) r^2."""
        return 4.0 * float(self.g2(radius * radius)) * radius * radius

    def value(self, z):
        z = np.asarray(z, dtype=float)
        return float(self.g((z * z).sum()))

    def gradient(self, z):
        z = np.asarray(z, dtype=float)
        return 2.0 * float(self.g1((z * z).sum())) * z

    def hessian(self, z):
        z = np.asarray(z, dtype=float)
        s = (z * z).sum()
        return 4.0 * float(self.g2(s)) * np.outer(z, z) + 2.0 * float(self.g1(s)) * np.eye(self.n)

    def value_grid(self, values):
        return self.g((values * values).sum(axis=-2))

    def gradient_grid(self, values):
        s = (values * values).sum(axis=-2)
        return 2.0 * self.g1(s)[..., np.newaxis, :] * values

    def hessian_apply_grid(self, values, direction):
        s = (values * values).sum(axis=-2)
        radial = (values * direction).sum(axis=-2)
        return (4.0 * (self.g2(s) * radial)[..., np.newaxis, :] * values
                + 2.0 * self.g1(s)[..., np.newaxis, :] * direction)

    def hessian_eigen_range_grid(self, values):
        # eigenvalues at z: 2 g'(s) with multiplicity n-1, and 2 g'(s) + 4 g''(s) s
        s = (values * values).sum(axis=-2)
        tangential = 2.0 * self.g1(s)
        radial = tangential + 4.0 * self.g2(s) * s
        return np.minimum(tangential, radial), np.maximum(tangential, radial)

    def radial_slope_grid(self, values):
        """g'(|u(x)|^2) along the grid."""
        return self.g1((values * values).sum(axis=-2))

    def minima_distance_sup(self, values):
        # spheres: sup_x min_i | |u(x)| - r_i |
        radius_field = np.sqrt((values * values).sum(axis=-2))
        gaps = np.min([np.abs(radius_field - r) for r in self.radii], axis=0)
        return float(gaps.max())

    def nearest_sphere_index(self, values):
        radius_field = np.sqrt((values * values).sum(axis=-2))
        gaps = [float(np.abs(radius_field - r).max()) for r in self.radii]
        return int(np.argmin(gaps))


def bulk_potential(potential, field):
    """V(u) integrated over the torus: (1/N) sum_j V(u(x_j))."""
    values = field.values if hasattr(field, "values") else np.asarray(field)
    return float(potential.value_grid(values).mean())


def free_potential(n=1):
    return FreePotential(n)


def _double_well_poly():
    # (1/4)(u^2 - 1)^2
    return Polynomial([0.25, 0.0, -0.5, 0.0, 0.25])


def _asymmetric_well_poly():
    # (1/18)(u + 1)^2 (u - 2)^2 (u^2 + 1): zero minima at -1 and 2 with
    # curvatures 2 and 5.
    base = Polynomial([1.0, 1.0]) ** 2 * Polynomial([-2.0, 1.0]) ** 2 * Polynomial([1.0, 0.0, 1.0])
    return base / 18.0


def make_potential(name, **params):
    """Catalog lookup by name; params as documented per entry."""
    name = name.lower()
    if name == "double_well":
        return ScalarPolynomialPotential(
            "double_well", _double_well_poly(),
            [Minimum([-1.0], 2.0), Minimum([1.0], 2.0)],
            growth_exponent=2.0, coercivity_constant=101.0,
            hessian_floor_radius=float(np.sqrt(2.0 / 3.0)))
    if name == "asymmetric_double_well":
        return ScalarPolynomialPotential(
            "asymmetric_double_well", _asymmetric_well_poly(),
            [Minimum([-1.0], 2.0), Minimum([2.0], 5.0)],
            growth_exponent=2.0, coercivity_constant=27.0,
            hessian_floor_radius=1.76)
    if name == "quadratic_well":
        return QuadraticWellPotential(int(params.get("n", 1)), float(params.get("a", 1.0)))
    if name == "sombrero":
        n = int(params.get("n", 3))
        # g(s) = (1/4)(s - 1)^2: g' = (s-1)/2, g'' = 1/2, g''' = 0
        return RotationInvariantPotential(
            "sombrero", n, Polynomial([0.25, -0.5, 0.25]), [1.0],
            growth_exponent=2.0, coercivity_constant=101.0,
            hessian_floor_radius=float(np.sqrt(2.0)))
    if name == "two_sphere":
        n = int(params.get("n", 3))
        # g(s) = (1/36)(s - 1)^2 (s - 4)^2: zeros at r = 1, 2 with g'' = 1/2 at both
        poly = Polynomial([-1.0, 1.0]) ** 2 * Polynomial([-4.0, 1.0]) ** 2 / 36.0
        return RotationInvariantPotential(
            "two_sphere", n, poly, [1.0, 2.0],
            growth_exponent=2.0, coercivity_constant=30.0,
            hessian_floor_radius=2.15)
    if name == "free":
        return FreePotential(int(params.get("n", 1)))
    raise ValueError(f"unknown potential '{name}'")


def builtin_catalog():
    """All catalog entries at representative dimensions."""
    entries = [
        make_potential("double_well"),
        make_potential("asymmetric_double_well"),
        make_potential("quadratic_well", n=1, a=1.0),
        make_potential("quadratic_well", n=2, a=1.0),
    ]
    entries += [make_potential("sombrero", n=n) for n in (2, 3, 4)]
    entries.append(make_potential("two_sphere", n=3))
    return entries
