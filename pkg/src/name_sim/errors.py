"""Exception hierarchy shared across the package."""


class NameSimError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NameSimError, ValueError):
    """Input outside the physically meaningful domain (t, omega, ...)."""


class ExceptionalPointError(DomainError):
    """|mu| >= 2: transition from damped to over-damped dynamics."""


class PhysicalityError(NameSimError, ValueError):
    """State parameters violate a positivity / uncertainty constraint."""


class SolverError(NameSimError, RuntimeError):
    """Numerical integration failed (unreachable tolerance, instability)."""


class SingularMapError(NameSimError, ValueError):
    """A required linear map is numerically singular."""


class ConfigError(NameSimError, ValueError):
    """Invalid run configuration.  Collects every violation found."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class GridMismatchError(NameSimError, ValueError):
    """Trajectory files cannot be compared (different horizons)."""
