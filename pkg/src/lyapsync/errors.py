"""Exception types shared across the package."""


class LyapsyncError(Exception):
    """Base class for all package-specific errors."""


class SpectralSymmetryError(LyapsyncError):
    """Spectral coefficients of a real field lost conjugate symmetry."""


class NonFiniteError(LyapsyncError):
    """A time step produced NaN or Inf, typically a blow-up / dt too large."""

    def __init__(self, time, message=None):
        self.time = time
        super().__init__(message or f"non-finite field values at t={time:.6g}")


class NoConvergenceError(LyapsyncError):
    """Iterative eigenvalue solve hit the iteration cap (degenerate spectrum?)."""

    def __init__(self, best_value, residual, iterations):
        self.best_value = best_value
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"power iteration did not converge after {iterations} iterations "
            f"(best estimate {best_value:.12g}, residual {residual:.3g})"
        )


class InsufficientBatchesError(LyapsyncError):
    """Run too short to form the requested number of batch-means batches."""


class WrongKindError(LyapsyncError):
    """Operation requires the other kind of potential (point minima vs spheres)."""


class KappaTooSmallError(LyapsyncError):
    """Viscosity below the threshold where the degenerate-minima bound holds."""

    def __init__(self, kappa, kappa_min):
        self.kappa = kappa
        self.kappa_min = kappa_min
        super().__init__(f"kappa={kappa:g} must exceed kappa_min={kappa_min:g}")


class DegenerateHessianError(LyapsyncError):
    """Hessian at a declared non-degenerate minimum is numerically singular."""


class ConfigError(LyapsyncError):
    """Base class for configuration file problems."""


class ParseError(ConfigError):
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class UnknownKeyError(ConfigError):
    def __init__(self, line_number, key):
        self.line_number = line_number
        self.key = key
        super().__init__(f"line {line_number}: unknown key '{key}'")


class OutOfRangeError(ConfigError):
    def __init__(self, key, value, constraint):
        self.key = key
        self.value = value
        self.constraint = constraint
        super().__init__(f"{key} = {value!r} violates {constraint}")
