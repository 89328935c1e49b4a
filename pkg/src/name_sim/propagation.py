"""Free evolution, observable reconstruction and the adiabatic reference solver.

Observables live in the four-vector (H, L, C, I): energy, kinetic-minus-
potential difference, position-momentum correlation, identity.  The isolated
dynamics is a closed-form 4x4 matrix; dissipative trajectories are mapped to
observables through the eigenoperator-basis moments and the same matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bath as _bath
from .algebra import QuadratureCoefficients, eigenoperator_coefficients
from .errors import DomainError, SingularMapError
from .gaussian import InteractionMoments, NameTrajectory, moments_from_params
from .ode import integrate_adaptive
from .protocol import (
    ATOMIC,
    Protocol,
    UnitSystem,
    alpha_at,
    kappa_of,
    omega_at,
    phase_integral,
)

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ObservableVector:
    """Expectation values (<H>, <L>, <C>, <I>) with <I> = 1."""

    H: float
    L: float
    C: float
    I: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.H, self.L, self.C, self.I])

    @classmethod
    def from_array(cls, v) -> "ObservableVector":
        v = np.asarray(v)
        if np.iscomplexobj(v):
            if np.abs(v.imag).max() > 1e-9 * max(1.0, np.abs(v.real).max()):
                raise ValueError(f"observable vector has imaginary residue: {v}")
            v = v.real
        return cls(H=float(v[0]), L=float(v[1]), C=float(v[2]), I=float(v[3]))


def _single_propagator(mu: float, w_ratio: float, theta: float) -> np.ndarray:
    k = kappa_of(mu)
    k2 = k * k
    c = math.cos(k * theta)
    s = math.sin(k * theta)
    block = np.array(
        [
            [4.0 - mu * mu * c, -mu * k * s, -2.0 * mu * (c - 1.0)],
            [-mu * k * s, k2 * c, -2.0 * k * s],
            [2.0 * mu * (c - 1.0), 2.0 * k * s, 4.0 * c - mu * mu],
        ]
    )
    out = np.eye(4)
    out[:3, :3] = (w_ratio / k2) * block
    return out


def free_propagator_matrix(p: Protocol, t: float) -> np.ndarray:
    """4x4 matrix propagating (H, L, C, I) under the isolated driven dynamics.

    The global prefactor omega(t)/omega0 acts on the 3x3 block only, so the
    identity row and column are exact.  Piecewise protocols compose as the
    ordered product of their segment propagators.
    """
    p._segment_at(t)  # domain check
    out = np.eye(4)
    for seg in p._parts:
        if seg.t0 >= t:
            break
        t_loc = min(t, seg.t1)
        w_ratio = seg.omega(t_loc) / seg.w0
        theta = seg.phase(t_loc)
        out = _single_propagator(seg.mu, w_ratio, theta) @ out
        if t <= seg.t1:
            break
    return out


def isolated_evolve(v0: ObservableVector, p: Protocol, t: float) -> ObservableVector:
    """Closed-form free evolution of the observable vector."""
    return ObservableVector.from_array(free_propagator_matrix(p, t) @ v0.as_array())


def casimir_invariant(v: ObservableVector, omega: float) -> float:
    """(H^2 - L^2 - C^2)/omega^2, conserved by the isolated dynamics."""
    return (v.H ** 2 - v.L ** 2 - v.C ** 2) / omega ** 2


@dataclass(frozen=True)
class BBasisMap:
    """4x4 map from <(b^2, b_dag b, b_dag^2, I)> to (H, L, C, I) at t = 0."""

    matrix: np.ndarray


def build_b_basis_map(
    coeffs: QuadratureCoefficients, p: Protocol, m: float, u: UnitSystem = ATOMIC
) -> BBasisMap:
    """Construct the moment map from the operator expansion of b, b_dagger.

    b^2, b_dag b and b_dag^2 are expanded over (Q^2, P^2, (QP+PQ)/2, I) using
    [Q, P] = i hbar, then composed with the definitions of H, L, C at omega0.
    Derived programmatically; the identity offset -1/2 in the b_dag b row is
    the operator-ordering term.
    """
    A, B, c = coeffs.A, coeffs.B, coeffs.c
    hbar = u.hbar
    # rows map (Q^2, P^2, S, I) -> (b^2, b_dag b, b_dag^2, I)
    m2 = np.array(
        [
            [c * A * A, c * B * B, 2.0 * c * A * B, 0.0],
            [
                c * abs(A) ** 2,
                c * abs(B) ** 2,
                2.0 * c * (np.conj(A) * B).real,
                -c * hbar * (np.conj(A) * B).imag,
            ],
            [c * np.conj(A) ** 2, c * np.conj(B) ** 2, 2.0 * c * np.conj(A * B), 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
        dtype=complex,
    )
    w0 = p.omega0
    m1 = np.array(
        [
            [0.5 * m * w0 ** 2, 0.5 / m, 0.0, 0.0],
            [-0.5 * m * w0 ** 2, 0.5 / m, 0.0, 0.0],
            [0.0, 0.0, w0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    if np.linalg.cond(m2) > _COND_LIMIT:
        raise SingularMapError("basis map is numerically singular")
    return BBasisMap(matrix=m1 @ np.linalg.inv(m2))


def moments_to_observables(
    mom: InteractionMoments, bmap: BBasisMap
) -> ObservableVector:
    bvec = np.array([mom.s, mom.n, np.conj(mom.s), 1.0], dtype=complex)
    return ObservableVector.from_array(bmap.matrix @ bvec)


def observables_from_initial(
    v0: ObservableVector, bmap: BBasisMap
) -> InteractionMoments:
    """Invert the basis map: observables at t = 0 to eigenoperator moments."""
    bvec = np.linalg.solve(bmap.matrix, v0.as_array().astype(complex))
    return InteractionMoments(n=float(bvec[1].real), s=complex(bvec[0]))


def observables_at(
    traj: NameTrajectory, p: Protocol, m: float, t: float, u: UnitSystem = ATOMIC
) -> ObservableVector:
    """Physical observables of a master-equation trajectory at time t.

    Evaluates the eigenoperator moments of the interaction-picture state and
    pushes them through the basis map and the free propagator of the segment
    containing t.
    """
    seg = traj.segment_of(t)
    mom = moments_from_params(traj.params_at(t))
    bmap = build_b_basis_map(seg.coeffs, seg.protocol, m, u)
    prop = free_propagator_matrix(seg.protocol, t - seg.t_start)
    bvec = np.array([mom.s, mom.n, np.conj(mom.s), 1.0], dtype=complex)
    return ObservableVector.from_array(prop @ (bmap.matrix @ bvec))


def coherence_measure(v: ObservableVector, omega: float, u: UnitSystem = ATOMIC) -> float:
    """sqrt(<L>^2 + <C>^2) / (hbar omega): rotation-invariant coherence."""
    if omega <= 0:
        raise DomainError(f"coherence_measure requires omega > 0, got {omega}")
    return math.hypot(v.L, v.C) / (u.hbar * omega)


def attractor_observables(
    p: Protocol, b: _bath.BathSpec, t: float, m: float = 1.0, u: UnitSystem = ATOMIC
) -> ObservableVector:
    """Observables of the instantaneous attractor at time t.

    Within the active segment: U(t) M (0, Nbar(alpha(t)), 0, 1).  Closed forms
    H_ia = hbar omega (2 Nbar + 1)/kappa, L_ia = 0, C_ia = -(mu/2) H_ia are
    recovered to rounding and exercised in the tests.
    """
    nbar = _bath.bose_occupation(alpha_at(p, t), b.temperature, u)
    seg = p._segment_at(t)
    rest = p.restarted_at(seg.t0) if p.is_piecewise else p
    coeffs = eigenoperator_coefficients(rest, m, u)
    bmap = build_b_basis_map(coeffs, rest, m, u)
    prop = free_propagator_matrix(rest, t - seg.t0)
    bvec = np.array([0.0, nbar, 0.0, 1.0], dtype=complex)
    return ObservableVector.from_array(prop @ (bmap.matrix @ bvec))


@dataclass
class AdiabaticTrajectory:
    """Instantaneous-basis moments (n, s)(t) and derived observables."""

    t: np.ndarray
    n: np.ndarray
    s: np.ndarray
    protocol: Protocol
    bath: _bath.BathSpec
    mass: float
    units: UnitSystem

    def observables(self, i: int) -> ObservableVector:
        w = omega_at(self.protocol, self.t[i])
        hw = self.units.hbar * w
        return ObservableVector(
            H=hw * (self.n[i] + 0.5),
            L=-hw * self.s[i].real,
            C=hw * self.s[i].imag,
        )


def adiabatic_evolve(
    n0: float,
    s0: complex,
    p: Protocol,
    b: _bath.BathSpec,
    t_grid,
    m: float = 1.0,
    u: UnitSystem = ATOMIC,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> AdiabaticTrajectory:
    """Adiabatic master equation in instantaneous moments.

    dn/dt = -(k_down - k_up) n + k_up and ds/dt = -(2 i omega + k_down - k_up) s
    with the rates evaluated at omega(t).  s = 0 is preserved exactly: the
    adiabatic dissipator never generates coherence.
    """
    t_grid = np.asarray(t_grid, dtype=float)

    def rhs(t, y):
        k = _bath.adiabatic_rates(b, p, t, m, u)
        gap = k.down - k.up
        w2 = 2.0 * omega_at(p, t)
        n, sr, si = y
        return np.array(
            [-gap * n + k.up, -gap * sr + w2 * si, -gap * si - w2 * sr]
        )

    y0 = np.array([n0, complex(s0).real, complex(s0).imag])
    ys = integrate_adaptive(rhs, t_grid, y0, rtol=rtol, atol=atol)
    return AdiabaticTrajectory(
        t=t_grid,
        n=ys[:, 0].copy(),
        s=ys[:, 1] + 1j * ys[:, 2],
        protocol=p,
        bath=b,
        mass=m,
        units=u,
    )
