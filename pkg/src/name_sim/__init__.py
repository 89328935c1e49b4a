"""Driven harmonic oscillator coupled to a thermal bath.

Master-equation solver in the squeezed-Gaussian parameterization, adiabatic
and isolated reference dynamics, and an exact composite-bath benchmark, plus
a config-driven scenario runner (CLI entry point ``name-sim``).
"""

__version__ = "0.1.0"

from .algebra import (
    GeneratorMatrix,
    QuadratureCoefficients,
    decompose_position,
    eigen_decompose_generator,
    eigenoperator_coefficients,
    generator_matrix,
)
from .bath import (
    BathSpec,
    RatePair,
    adiabatic_rates,
    bose_occupation,
    gamma_rate,
    name_rates,
    rate_ratio_adiabatic,
    spectral_density,
)
from .bench import (
    BathModeSet,
    BenchTrajectory,
    CompositeMomentState,
    build_generator,
    compose_initial_state,
    integrate_bench,
    sample_bath_modes,
    system_initial_moments,
    thermal_initial_moments,
)
from .errors import (
    ConfigError,
    DomainError,
    ExceptionalPointError,
    GridMismatchError,
    NameSimError,
    PhysicalityError,
    SingularMapError,
    SolverError,
)
from .gaussian import (
    GaussianStateParams,
    InteractionMoments,
    NameTrajectory,
    instantaneous_attractor,
    integrate_name,
    moments_from_params,
    name_rhs,
    params_from_moments,
    partition_function,
)
from .propagation import (
    AdiabaticTrajectory,
    BBasisMap,
    ObservableVector,
    adiabatic_evolve,
    attractor_observables,
    build_b_basis_map,
    casimir_invariant,
    coherence_measure,
    free_propagator_matrix,
    isolated_evolve,
    moments_to_observables,
    observables_at,
    observables_from_initial,
)
from .protocol import (
    ATOMIC,
    Protocol,
    UnitSystem,
    ValidityReport,
    alpha_at,
    alpha_bar_at,
    kappa,
    kappa_of,
    omega_at,
    phase_integral,
    theta_pm,
    validity_report,
)
