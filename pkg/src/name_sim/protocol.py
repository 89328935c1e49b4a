"""Constant-mu driving protocol and derived kinematic quantities.

The frequency schedule is omega(t) = omega0 / (1 - mu*omega0*t), the unique
protocol with a constant adiabatic parameter mu = omega' / omega^2.  Arbitrary
schedules are approximated by chaining constant-mu segments with a continuous
frequency at the joints.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import DomainError, ExceptionalPointError

_T_SLACK = 1e-9  # relative slack when checking t against segment boundaries


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants.  Defaults are atomic units (hbar = k_B = 1)."""

    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        if self.hbar <= 0 or self.kB <= 0:
            raise DomainError("hbar and kB must be strictly positive")


ATOMIC = UnitSystem()


def kappa_of(mu: float) -> float:
    """sqrt(4 - mu^2); the effective-frequency factor of a constant-mu drive."""
    if abs(mu) >= 2.0:
        raise ExceptionalPointError(
            f"|mu| = {abs(mu)} >= 2: exceptional point, over-damped regime"
        )
    return math.sqrt(4.0 - mu * mu)


@dataclass(frozen=True)
class _Segment:
    t0: float
    t1: float
    mu: float
    w0: float          # omega at segment start
    theta0: float      # accumulated phase integral at segment start
    theta_k0: float    # accumulated kappa-weighted phase at segment start

    def omega(self, t):
        denom = 1.0 - self.mu * self.w0 * (t - self.t0)
        if denom <= 0.0:
            raise DomainError(
                f"omega diverges: 1 - mu*omega0*t = {denom} <= 0 at t = {t}"
            )
        return self.w0 / denom

    def phase(self, t):
        """Integral of omega from segment start to t."""
        if self.mu == 0.0:
            return self.w0 * (t - self.t0)
        return math.log(self.omega(t) / self.w0) / self.mu


@dataclass(frozen=True)
class Protocol:
    """Frequency schedule with constant adiabatic parameter.

    Either a single (mu, omega0, t_final) stretch, or a piecewise chain given
    as ``segments=[(mu_1, dt_1), (mu_2, dt_2), ...]`` in which case ``mu`` is
    the first segment's value and ``t_final`` the total duration.
    """

    mu: float
    omega0: float
    t_final: float
    segments: tuple | None = None
    _parts: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.omega0 <= 0:
            raise DomainError(f"omega0 must be positive, got {self.omega0}")
        if self.t_final < 0:
            raise DomainError(f"t_final must be >= 0, got {self.t_final}")
        raw = self.segments
        if raw is None:
            raw = ((self.mu, self.t_final),)
        else:
            raw = tuple((float(m), float(dt)) for m, dt in raw)
            total = sum(dt for _, dt in raw)
            if not math.isclose(total, self.t_final, rel_tol=1e-12, abs_tol=1e-12):
                raise DomainError(
                    f"segment durations sum to {total}, t_final is {self.t_final}"
                )
            object.__setattr__(self, "segments", raw)
            object.__setattr__(self, "mu", raw[0][0])

        parts = []
        t0, w0, th0, thk0 = 0.0, self.omega0, 0.0, 0.0
        for mu_i, dt_i in raw:
            kappa_of(mu_i)  # rejects |mu| >= 2
            if dt_i < 0:
                raise DomainError("segment durations must be >= 0")
            seg = _Segment(t0, t0 + dt_i, mu_i, w0, th0, thk0)
            # omega must stay finite and positive across the whole segment
            w1 = seg.omega(seg.t1)
            dth = seg.phase(seg.t1)
            parts.append(seg)
            t0, w0 = seg.t1, w1
            th0 += dth
            thk0 += kappa_of(mu_i) * dth
        object.__setattr__(self, "_parts", tuple(parts))

    def _segment_at(self, t: float) -> _Segment:
        if t < -_T_SLACK or t > self.t_final * (1 + _T_SLACK) + _T_SLACK:
            raise DomainError(f"t = {t} outside protocol domain [0, {self.t_final}]")
        for seg in self._parts:
            if t <= seg.t1 or seg is self._parts[-1]:
                return seg
        return self._parts[-1]

    @property
    def is_piecewise(self) -> bool:
        return len(self._parts) > 1

    def restarted_at(self, t: float) -> "Protocol":
        """The remainder of the protocol as a fresh protocol starting at t."""
        seg = self._segment_at(t)
        idx = self._parts.index(seg)
        head = [(seg.mu, seg.t1 - t)]
        tail = [(s.mu, s.t1 - s.t0) for s in self._parts[idx + 1:]]
        segs = head + tail
        return Protocol(
            mu=segs[0][0],
            omega0=omega_at(self, t),
            t_final=self.t_final - t,
            segments=tuple(segs) if len(segs) > 1 else None,
        )


def omega_at(p: Protocol, t: float) -> float:
    """Instantaneous angular frequency omega(t) = omega0 / (1 - mu*omega0*t)."""
    return p._segment_at(t).omega(t)


def kappa(p: Protocol, t: float = 0.0) -> float:
    """sqrt(4 - mu^2) for the segment active at time t."""
    return kappa_of(p._segment_at(t).mu)


def phase_integral(p: Protocol, t: float) -> float:
    """Accumulated phase Theta(t) = int_0^t omega dt'.

    Closed form (1/mu) log(omega(t)/omega0) per segment; segments add.
    """
    seg = p._segment_at(t)
    return seg.theta0 + seg.phase(t)


def theta_pm(p: Protocol, t: float) -> tuple[float, float]:
    """Eigenoperator phases (theta_plus, theta_minus) = (-+) (kappa/2) Theta(t).

    Sign convention: theta_plus = -(kappa/2) Theta, so that the '+' operator is
    the lowering-type one whose mu -> 0 limit is the annihilation operator.
    """
    seg = p._segment_at(t)
    half = 0.5 * (seg.theta_k0 + kappa_of(seg.mu) * seg.phase(t))
    return -half, half


def alpha_at(p: Protocol, t: float) -> float:
    """Effective frequency alpha(t) = (kappa/2) omega(t) seen by the bath."""
    return 0.5 * kappa(p, t) * omega_at(p, t)


def alpha_bar_at(p: Protocol, t: float, tau_B: float) -> float:
    """First-order bath-memory correction to alpha(t).

    alpha_bar = (kappa/2) omega (1 - mu*omega*tau_B/2); equals alpha_at for a
    delta-correlated bath (tau_B = 0).
    """
    if tau_B < 0:
        raise DomainError(f"tau_B must be >= 0, got {tau_B}")
    seg = p._segment_at(t)
    w = seg.omega(t)
    x = seg.mu * w * tau_B
    if abs(x) >= 1.0:
        warnings.warn(
            f"|mu*omega*tau_B| = {abs(x):.3g} >= 1: memory correction is not "
            "perturbative at t = %g" % t,
            stacklevel=2,
        )
    return 0.5 * kappa_of(seg.mu) * w * (1.0 - 0.5 * x)


def _omega_extrema(p: Protocol) -> tuple[float, float]:
    """(min, max) of omega over [0, t_final]; omega is monotone per segment."""
    vals = [p.omega0]
    for seg in p._parts:
        vals.append(seg.omega(seg.t1))
    return min(vals), max(vals)


@dataclass(frozen=True)
class ValidityReport:
    """Timescales and dimensionless ratios of the timescale-separation analysis.

    Flags: 'pass' below 0.1, 'warn' in [0.1, 1), 'fail' at or above 1.
    Purely advisory; nothing downstream consumes it.
    """

    tau_S: float
    tau_B: float
    tau_R: float
    tau_d: float
    ratio_coupling: float   # g^2 / (bandwidth * min omega)
    ratio_driving: float    # max omega / (bandwidth * min(1, 1/|mu|))
    flag_coupling: str
    flag_driving: str

    @property
    def ok(self) -> bool:
        return "fail" not in (self.flag_coupling, self.flag_driving)

    def as_dict(self) -> dict:
        return {
            "tau_S": self.tau_S,
            "tau_B": self.tau_B,
            "tau_R": self.tau_R,
            "tau_d": self.tau_d,
            "ratio_coupling": self.ratio_coupling,
            "ratio_driving": self.ratio_driving,
            "flag_coupling": self.flag_coupling,
            "flag_driving": self.flag_driving,
            "ok": self.ok,
        }


def _flag(x: float) -> str:
    if x < 0.1:
        return "pass"
    if x < 1.0:
        return "warn"
    return "fail"


def validity_report(p: Protocol, bath) -> ValidityReport:
    """Timescale separation diagnostics for a protocol/bath pair.

    bath is any object exposing ``g``, ``omega_min``, ``omega_max`` and
    ``n_modes`` (normally a BathSpec).  tau_R uses 1/(g^2 * density of states)
    as the advisory proportionality constant.
    """
    w_min, w_max = _omega_extrema(p)
    dnu = bath.omega_max - bath.omega_min
    mu_max = max(abs(seg.mu) for seg in p._parts)

    tau_S = 1.0 / w_min
    tau_B = 1.0 / dnu
    density = max(bath.n_modes - 1, 1) / dnu
    tau_R = 1.0 / (bath.g ** 2 * density) if bath.g != 0 else math.inf
    tau_d = math.inf if mu_max == 0 else 1.0 / (mu_max * w_max)

    r_coupling = bath.g ** 2 / (dnu * w_min)
    r_driving = w_max / (dnu * min(1.0, 1.0 / mu_max)) if mu_max > 0 else w_max / dnu

    return ValidityReport(
        tau_S=tau_S,
        tau_B=tau_B,
        tau_R=tau_R,
        tau_d=tau_d,
        ratio_coupling=r_coupling,
        ratio_driving=r_driving,
        flag_coupling=_flag(r_coupling),
        flag_driving=_flag(r_driving),
    )
