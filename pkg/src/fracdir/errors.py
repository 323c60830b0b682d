"""Exception hierarchy shared by all modules."""


class FracdirError(Exception):
    """Base class for package errors."""


class InputError(FracdirError, ValueError):
    """Malformed argument (non-finite coordinate, bad time, ...)."""


class DomainError(FracdirError, ValueError):
    """A point lies in the wrong region for the requested operation."""


class SingularityError(FracdirError, ValueError):
    """Evaluation requested exactly on a kernel singularity."""


class DivergenceError(FracdirError, ArithmeticError):
    """An integral or shell sum does not converge."""


class ToleranceError(FracdirError, ArithmeticError):
    """Quadrature failed to reach the requested accuracy under refinement."""


class ResolutionError(FracdirError, ArithmeticError):
    """Grid too coarse for the spectral oracle (aliasing detected)."""


class StatisticalPowerError(FracdirError, RuntimeError):
    """Too few Monte Carlo samples survived to form an estimate."""


class IntegrabilityError(FracdirError, ValueError):
    """Integrand violates the integrability requirement of the operation."""


class ConfigError(FracdirError, ValueError):
    """Scenario configuration failed schema or hypothesis validation."""


class InsufficientRangeError(InputError):
    """Samples too few or spanning too narrow a range for an exponent fit."""
