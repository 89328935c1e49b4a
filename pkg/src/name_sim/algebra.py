"""Propagator eigenoperators for the quadratic (oscillator) algebra.

The free evolution of the scaled quadratures closes on a 2x2 generator
G(t) = omega(t) * A0 with constant A0; its left eigenvectors give the ladder
operators F+- = A*Q + B*P that diagonalize the driven dynamics, and the
normalization c that turns sqrt(c)*F+ into a canonical annihilation operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMapError
from .protocol import ATOMIC, Protocol, UnitSystem, kappa_of, omega_at, theta_pm

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class QuadratureCoefficients:
    """Coefficients of F+ = A*Q + B*P and the normalization c of b = sqrt(c) F+.

    Satisfies 2*hbar*c*Im(conj(A)*B) = 1 so that [b, b_dagger] = 1.
    """

    A: complex
    B: complex
    c: float
    kappa: float
    mass: float
    omega0: float
    hbar: float


def eigenoperator_coefficients(
    p: Protocol, m: float, u: UnitSystem = ATOMIC
) -> QuadratureCoefficients:
    """A, B, c, kappa for the protocol's initial segment.

    A = (i mu/kappa + 1)/2, B = i/(m omega0 kappa); c follows from the
    commutator normalization and reduces to 2 m omega0 / hbar at mu = 0.
    """
    if m <= 0:
        raise ValueError(f"mass must be positive, got {m}")
    k = kappa_of(p.mu)
    A = 0.5 * (1.0 + 1j * p.mu / k)
    B = 1j / (m * p.omega0 * k)
    c = 1.0 / (2.0 * u.hbar * (np.conj(A) * B).imag)
    return QuadratureCoefficients(
        A=A, B=B, c=c, kappa=k, mass=m, omega0=p.omega0, hbar=u.hbar
    )


@dataclass(frozen=True)
class GeneratorMatrix:
    """Constant Heisenberg-equation generator with a scalar time profile.

    d/dt (Qbar, Pbar) = f(t) * matrix @ (Qbar, Pbar), with f(t) = omega(t).
    """

    matrix: np.ndarray
    protocol: Protocol

    def profile(self, t: float) -> float:
        return omega_at(self.protocol, t)


def generator_matrix(p: Protocol) -> GeneratorMatrix:
    """The 2x2 generator [[mu/2, 1], [-1, -mu/2]] on scaled quadratures."""
    mu = p.mu
    a0 = np.array([[0.5 * mu, 1.0], [-1.0, -0.5 * mu]])
    return GeneratorMatrix(matrix=a0, protocol=p)


def eigen_decompose_generator(g) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and left eigenvectors (as rows) of a generator matrix.

    Left eigenvectors u satisfy u @ A = chi * u and are scaled so that the
    last component equals 1 when possible (the Pbar convention that makes the
    2x2 case read u+- = (mu +- i kappa)/2 * Qbar + Pbar).  The eigenoperator
    associated with u accumulates the phase chi * int f(t') dt'.
    """
    a0 = np.asarray(getattr(g, "matrix", g), dtype=complex)
    chi, right = np.linalg.eig(a0)
    if np.linalg.cond(right) > _COND_LIMIT:
        raise SingularMapError(
            "generator is numerically defective (eigenvector condition "
            f"number exceeds {_COND_LIMIT:g})"
        )
    # rows of inv(right) are left eigenvectors paired with chi in order
    left = np.linalg.inv(right)
    for i in range(left.shape[0]):
        tail = left[i, -1]
        if abs(tail) > 1e-12 * np.abs(left[i]).max():
            left[i] /= tail
        else:
            left[i] /= left[i, np.argmax(np.abs(left[i]))]
    return chi, left


@dataclass(frozen=True)
class PositionDecomposition:
    xi: float
    theta_plus: float
    theta_minus: float
    coeffs: QuadratureCoefficients


def decompose_position(
    p: Protocol, t: float, m: float, u: UnitSystem = ATOMIC
) -> PositionDecomposition:
    """Amplitude and phases of Q-tilde(t) = xi(t) (F- e^{i th-} + F+ e^{i th+}).

    xi(t) = sqrt(omega0/omega(t)) = sqrt(1 - mu*omega0*t) on a constant-mu
    stretch; always positive on the protocol domain.
    """
    w = omega_at(p, t)
    xi = np.sqrt(p.omega0 / w)
    th_p, th_m = theta_pm(p, t)
    return PositionDecomposition(
        xi=float(xi),
        theta_plus=th_p,
        theta_minus=th_m,
        coeffs=eigenoperator_coefficients(p, m, u),
    )
