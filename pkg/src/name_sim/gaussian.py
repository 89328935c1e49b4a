"""Squeezed-Gaussian solution of the non-adiabatic master equation.

The dissipative flow preserves the two-parameter family
rho ~ exp(gamma b^2) exp(beta b_dag b) exp(conj(gamma) b_dag^2), so the master
equation reduces to two coupled scalar ODEs for (beta, gamma).  This module
owns that parameterization, the (beta, gamma) <-> (<b_dag b>, <b^2>) maps,
the flow itself, its instantaneous fixed point, and the trajectory
integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import bath as _bath
from .algebra import QuadratureCoefficients, eigenoperator_coefficients
from .errors import DomainError, PhysicalityError
from .ode import integrate_adaptive, integrate_fixed
from .protocol import ATOMIC, Protocol, UnitSystem, alpha_at

_PHYS_MARGIN = 0.0  # strict positivity of the partition-function discriminant


@dataclass(frozen=True)
class GaussianStateParams:
    """(beta, gamma) of the squeezed Gaussian ansatz.

    beta plays the role of a (negative) thermal exponent, gamma of a complex
    squeezing amplitude; the state exists only while
    (e^-beta - 1)^2 > 4|gamma|^2.
    """

    beta: float
    gamma: complex = 0.0

    def __post_init__(self):
        d = discriminant(self.beta, self.gamma)
        if self.beta >= 0 or d <= _PHYS_MARGIN:
            raise PhysicalityError(
                f"unphysical Gaussian parameters beta={self.beta}, "
                f"gamma={self.gamma} (discriminant {d:.3g})"
            )


class InteractionMoments(NamedTuple):
    """Second moments in the eigenoperator basis: n = <b_dag b>, s = <b^2>."""

    n: float
    s: complex


def _expm1_safe(x: float) -> float:
    try:
        return math.expm1(x)
    except OverflowError:
        return math.inf


def discriminant(beta: float, gamma: complex) -> float:
    """(e^-beta - 1)^2 - 4|gamma|^2; positive on the physical domain."""
    v = _expm1_safe(-beta)
    return v * v - 4.0 * abs(gamma) ** 2


def partition_function(st: GaussianStateParams) -> float:
    """Z(beta, gamma); diverges as |gamma| approaches the physicality bound."""
    v = _expm1_safe(-st.beta)
    r = 2.0 * abs(st.gamma) / v  # < 1 on the physical domain
    if not r < 1.0:
        raise PhysicalityError(f"state outside physical domain: 2|gamma| >= e^-beta - 1")
    return (1.0 + 1.0 / v) / math.sqrt((1.0 - r) * (1.0 + r))


def moments_from_params(st: GaussianStateParams) -> InteractionMoments:
    """n = (e^-beta - 1)/D and s = 2 conj(gamma)/D with D the discriminant.

    Evaluated as n = 1/(v - 4|gamma|^2/v) so that the deep-quantum limit
    (beta -> -inf) underflows cleanly to n = 0 instead of overflowing.
    """
    v = _expm1_safe(-st.beta)
    g2 = abs(st.gamma) ** 2
    if not 4.0 * g2 / v < v:
        raise PhysicalityError(
            f"state outside physical domain: discriminant <= 0 at beta={st.beta}"
        )
    denom = v - 4.0 * g2 / v
    return InteractionMoments(n=1.0 / denom, s=(2.0 * np.conj(st.gamma) / v) / denom)


def params_from_moments(mom: InteractionMoments) -> GaussianStateParams:
    """Closed-form inverse of moments_from_params.

    With D = 1/(n^2 - |s|^2): beta = -log(1 + n D), gamma = conj(s) D / 2.
    """
    n, s = mom.n, mom.s
    gap = n * n - abs(s) ** 2
    if n <= 0 or gap <= 0:
        raise PhysicalityError(
            f"moments n={n}, |s|={abs(s)} not representable (need n^2 > |s|^2, n > 0)"
        )
    d = 1.0 / gap
    beta = -math.log1p(n * d)
    gamma = np.conj(s) * d / 2.0
    return GaussianStateParams(beta=beta, gamma=complex(gamma))


def _rhs_values(beta, g_re, g_im, k_down, k_up):
    em1 = math.expm1(beta)          # e^beta - 1, in (-1, 0) for physical beta
    ep1 = _expm1_safe(-beta)        # e^-beta - 1, large in the cold limit
    up_heat = k_up * ep1 if k_up != 0.0 else 0.0
    dbeta = k_down * em1 + up_heat + 4.0 * k_up * (em1 + 1.0) * (
        g_re * g_re + g_im * g_im
    )
    up_sq = k_up * (ep1 + 1.0) if k_up != 0.0 else 0.0
    common = (k_down + k_up) - 2.0 * up_sq
    return dbeta, common * g_re, common * g_im


def name_rhs(st, k_down: float, k_up: float) -> tuple[float, complex]:
    """Right-hand side (dbeta/dt, dgamma/dt) of the reduced master equation."""
    db, dgr, dgi = _rhs_values(
        st.beta, st.gamma.real, st.gamma.imag, k_down, k_up
    )
    return db, complex(dgr, dgi)


class AttractorState(NamedTuple):
    params: GaussianStateParams
    occupation: float


def instantaneous_attractor(
    p: Protocol, b: _bath.BathSpec, t: float, u: UnitSystem = ATOMIC
) -> AttractorState:
    """Fixed point of the frozen-time flow: gamma = 0, beta = -hbar alpha/kB T.

    The associated occupation is the Bose factor at the effective frequency,
    <b_dag b> = Nbar(alpha(t)).
    """
    a = alpha_at(p, t)
    if b.temperature <= 0:
        raise DomainError("instantaneous attractor requires T > 0")
    if b.g == 0.0 or _bath._kernel_pair(b, a, 1.0, u).down == 0.0:
        raise DomainError(
            f"attractor undefined at t = {t}: no bath coupling at alpha = {a:.6g}"
        )
    beta_ia = -u.hbar * a / (u.kB * b.temperature)
    occ = _bath.bose_occupation(a, b.temperature, u)
    return AttractorState(GaussianStateParams(beta=beta_ia, gamma=0.0), occ)


@dataclass(frozen=True)
class SegmentBasis:
    """Eigenoperator basis valid on one constant-mu stretch of the protocol."""

    t_start: float
    t_end: float
    protocol: Protocol          # restarted at t_start
    coeffs: QuadratureCoefficients


@dataclass
class NameTrajectory:
    """Sampled (beta, gamma)(t) plus everything needed to reconstruct rates."""

    t: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    protocol: Protocol
    bath: _bath.BathSpec
    mass: float
    units: UnitSystem
    include_xi_sq: bool
    memory_correction: bool
    segments: tuple[SegmentBasis, ...]

    def segment_of(self, t: float) -> SegmentBasis:
        for seg in self.segments:
            if t <= seg.t_end or seg is self.segments[-1]:
                return seg
        return self.segments[-1]

    def params_at(self, t: float) -> GaussianStateParams:
        """State at time t (linear interpolation between samples)."""
        if t < self.t[0] - 1e-12 or t > self.t[-1] + 1e-12:
            raise DomainError(f"t = {t} outside trajectory range")
        beta = float(np.interp(t, self.t, self.beta))
        g_re = float(np.interp(t, self.t, self.gamma.real))
        g_im = float(np.interp(t, self.t, self.gamma.imag))
        return GaussianStateParams(beta=beta, gamma=complex(g_re, g_im))

    def rates_at(self, t: float) -> _bath.RatePair:
        seg = self.segment_of(t)
        return _bath.name_rates(
            self.bath,
            seg.protocol,
            seg.coeffs,
            t - seg.t_start,
            include_xi_sq=self.include_xi_sq,
            memory_correction=self.memory_correction,
            u=self.units,
        )


def _check_physical(t, y):
    v = _expm1_safe(-y[0])
    if y[0] >= 0 or v * v - 4.0 * (y[1] ** 2 + y[2] ** 2) <= 0:
        raise PhysicalityError(
            f"Gaussian ansatz left the physical domain at t = {t:.6g} "
            f"(beta = {y[0]:.6g}, |gamma| = {math.hypot(y[1], y[2]):.6g}); "
            "the reduced description broke down"
        )


def integrate_name(
    st0: GaussianStateParams,
    p: Protocol,
    b: _bath.BathSpec,
    t_grid,
    m: float = 1.0,
    u: UnitSystem = ATOMIC,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    dt_max: float | None = None,
    fixed_dt: float | None = None,
    include_xi_sq: bool = True,
    memory_correction: bool = False,
) -> NameTrajectory:
    """Integrate the (beta, gamma) flow over the protocol.

    Adaptive embedded RK 4(5) by default; pass fixed_dt for the fixed-step
    reproducibility mode.  The physicality invariant is asserted after every
    accepted step.  Piecewise protocols are integrated segment by segment,
    converting the state between the segment eigenoperator bases so that the
    physical observables stay continuous at the joints.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 1 or t_grid[0] != 0.0 or np.any(np.diff(t_grid) < 0):
        raise DomainError("trajectory grid must be non-decreasing and start at t = 0")
    if t_grid[-1] > p.t_final * (1 + 1e-12) + 1e-12:
        raise DomainError("trajectory grid extends beyond the protocol horizon")

    segments = _segment_bases(p, m, u)
    betas = np.empty(len(t_grid))
    gammas = np.empty(len(t_grid), dtype=complex)
    betas[0] = st0.beta
    gammas[0] = st0.gamma
    state = st0
    for k_seg, seg in enumerate(segments):
        last = k_seg == len(segments) - 1
        sel = np.where((t_grid > seg.t_start) & (t_grid <= seg.t_end))[0]
        # integrate through the whole segment (the end state seeds the next
        # one); the final segment only needs to reach the last sample
        tail = seg.t_end - seg.t_start
        if last:
            tail = max(t_grid[-1] - seg.t_start, 0.0)
        local = [0.0] + list(t_grid[sel] - seg.t_start)
        if local[-1] < tail - 1e-15:
            local.append(tail)

        def rhs(tau, y, _seg=seg):
            k = _bath.name_rates(
                b, _seg.protocol, _seg.coeffs, tau,
                include_xi_sq=include_xi_sq,
                memory_correction=memory_correction,
                u=u,
            )
            return np.array(_rhs_values(y[0], y[1], y[2], k.down, k.up))

        y0 = np.array([state.beta, state.gamma.real, state.gamma.imag])
        if fixed_dt is not None:
            ys = _fixed_through_grid(rhs, np.asarray(local), y0, fixed_dt)
        else:
            ys = integrate_adaptive(
                rhs, np.asarray(local), y0, rtol=rtol, atol=atol, dt_max=dt_max,
                on_step=_check_physical,
            )
        for j, idx in enumerate(sel, start=1):
            _check_physical(t_grid[idx], ys[j])
            betas[idx] = ys[j][0]
            gammas[idx] = complex(ys[j][1], ys[j][2])
        end_state = GaussianStateParams(
            beta=float(ys[-1][0]), gamma=complex(ys[-1][1], ys[-1][2])
        )
        state = (
            end_state
            if last
            else _convert_between_bases(end_state, seg, segments[k_seg + 1])
        )

    return NameTrajectory(
        t=t_grid,
        beta=betas,
        gamma=gammas,
        protocol=p,
        bath=b,
        mass=m,
        units=u,
        include_xi_sq=include_xi_sq,
        memory_correction=memory_correction,
        segments=segments,
    )


def _fixed_through_grid(rhs, local_grid, y0, dt):
    ys = [np.array(y0, dtype=float)]
    for ta, tb in zip(local_grid[:-1], local_grid[1:]):
        if tb <= ta:
            ys.append(ys[-1].copy())
            continue
        _, recs = integrate_fixed(
            rhs, ta, tb, ys[-1], dt, tableau="classic", record_every=10 ** 9
        )
        _check_physical(tb, recs[-1])
        ys.append(recs[-1])
    return np.asarray(ys)


def _segment_bases(p: Protocol, m: float, u: UnitSystem):
    if not p.is_piecewise:
        return (
            SegmentBasis(
                t_start=0.0,
                t_end=p.t_final,
                protocol=p,
                coeffs=eigenoperator_coefficients(p, m, u),
            ),
        )
    out = []
    for seg in p._parts:
        rest = p.restarted_at(seg.t0)
        coeffs = eigenoperator_coefficients(rest, m, u)
        out.append(
            SegmentBasis(t_start=seg.t0, t_end=seg.t1, protocol=rest, coeffs=coeffs)
        )
    return tuple(out)


def _convert_between_bases(
    state: GaussianStateParams, seg_from: SegmentBasis, seg_to: SegmentBasis
) -> GaussianStateParams:
    """Re-express the state at a segment boundary in the next segment's basis.

    Route: (beta, gamma) -> b-moments -> physical observables at the joint
    (via the outgoing segment's map and propagator) -> b-moments of the fresh
    segment -> (beta, gamma).
    """
    from .propagation import build_b_basis_map, free_propagator_matrix

    mom = moments_from_params(state)
    m_out = build_b_basis_map(
        seg_from.coeffs, seg_from.protocol, seg_from.coeffs.mass
    )
    tau = seg_from.t_end - seg_from.t_start
    prop = free_propagator_matrix(seg_from.protocol, tau)
    bvec = np.array([mom.s, mom.n, np.conj(mom.s), 1.0], dtype=complex)
    v = prop @ (m_out.matrix @ bvec)
    m_in = build_b_basis_map(seg_to.coeffs, seg_to.protocol, seg_to.coeffs.mass)
    bvec_new = np.linalg.solve(m_in.matrix, v)
    return params_from_moments(
        InteractionMoments(n=float(bvec_new[1].real), s=complex(bvec_new[0]))
    )
