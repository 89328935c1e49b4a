"""Spectral densities, occupation factors and golden-rule rates.

Two coupling conventions are supported through the spectral model:

* ``flat`` / ``ohmic``: bath momenta couple to the position (the analytical
  convention); the rate kernel is (m pi/hbar) * nu * J(nu) * (Nbar + 1).
* ``matched``: bath positions couple to the position, microscopically matched
  to the discretized composite benchmark; the kernel is
  (pi/hbar) * f(nu) / (m nu) * (Nbar + 1) with f the bath mode density.

Kernels are per unit g^2; the coupling strength multiplies the assembled
rates, so g = 0 switches dissipation off for every model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .algebra import QuadratureCoefficients
from .errors import DomainError
from .protocol import ATOMIC, Protocol, UnitSystem, alpha_at, alpha_bar_at, omega_at

_SPECTRAL_MODELS = ("flat", "ohmic", "power_law", "matched")


@dataclass(frozen=True)
class BathSpec:
    """Thermal bath parameters.

    omega_min/omega_max delimit the (hard-cut) spectral band.  tau_B is the
    correlation time used by the first-order memory correction, not the
    1/bandwidth estimate of the validity analysis.  n_modes is the mode count
    of the discretized benchmark and sets the mode density of the ``matched``
    model.
    """

    temperature: float
    spectral: str = "flat"
    J0: float = 1e-3
    exponent: float = 1.0
    omega_ref: float = 1.0
    omega_min: float = 0.6
    omega_max: float = 1000.0
    g: float = 1.0
    tau_B: float = 0.0
    n_modes: int = 1000

    def __post_init__(self):
        problems = []
        if self.temperature < 0:
            problems.append(f"temperature must be >= 0, got {self.temperature}")
        if self.spectral not in _SPECTRAL_MODELS:
            problems.append(
                f"spectral must be one of {_SPECTRAL_MODELS}, got {self.spectral!r}"
            )
        if self.J0 < 0:
            problems.append(f"J0 must be >= 0, got {self.J0}")
        if self.spectral in ("ohmic", "power_law") and self.exponent < 0:
            problems.append(f"exponent must be >= 0, got {self.exponent}")
        if not 0 < self.omega_min < self.omega_max:
            problems.append(
                f"need 0 < omega_min < omega_max, got [{self.omega_min}, {self.omega_max}]"
            )
        if self.tau_B < 0:
            problems.append(f"tau_B must be >= 0, got {self.tau_B}")
        if self.n_modes < 1:
            problems.append(f"n_modes must be >= 1, got {self.n_modes}")
        if problems:
            raise DomainError("; ".join(problems))

    @property
    def bandwidth(self) -> float:
        return self.omega_max - self.omega_min

    @property
    def mode_density(self) -> float:
        """Modes per unit frequency of the uniform discretization."""
        return max(self.n_modes - 1, 1) / self.bandwidth

    def in_band(self, omega: float) -> bool:
        return self.omega_min <= omega <= self.omega_max


class RatePair(NamedTuple):
    down: float
    up: float


def bose_occupation(omega: float, temperature: float, u: UnitSystem = ATOMIC) -> float:
    """Bose-Einstein mean occupation 1/(exp(hbar w / kB T) - 1); 0 at T = 0."""
    if omega <= 0:
        raise DomainError(f"bose_occupation requires omega > 0, got {omega}")
    if temperature < 0:
        raise DomainError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return 0.0
    x = u.hbar * omega / (u.kB * temperature)
    if x > 700.0:  # expm1 would overflow; relative error below 1e-300 here
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def spectral_density(b: BathSpec, omega: float) -> float:
    """J(omega), zero outside the band (hard cut)."""
    if not b.in_band(omega):
        return 0.0
    if b.spectral == "flat":
        return b.J0
    if b.spectral in ("ohmic", "power_law"):
        return b.J0 * (omega / b.omega_ref) ** b.exponent
    # matched: density of states times unit coupling strength
    return b.mode_density


def _kernel_pair(b: BathSpec, nu: float, m: float, u: UnitSystem) -> RatePair:
    """(down, up) golden-rule kernels at frequency nu, per unit g^2."""
    if nu <= 0 or not b.in_band(nu):
        return RatePair(0.0, 0.0)
    if b.spectral == "matched":
        base = math.pi * b.mode_density / (u.hbar * m * nu)
    else:
        base = m * math.pi * nu * spectral_density(b, nu) / u.hbar
    nbar = bose_occupation(nu, b.temperature, u)
    return RatePair(base * (nbar + 1.0), base * nbar)


def gamma_rate(b: BathSpec, alpha: float, m: float, u: UnitSystem = ATOMIC) -> float:
    """Downward rate kernel gamma(alpha) = (m pi/hbar) alpha J(alpha) (Nbar+1).

    Per unit g^2; vanishes outside the spectral band.  For the ``matched``
    model the position-coupled kernel (pi/hbar) f/(m alpha) (Nbar+1) is
    returned instead.
    """
    if alpha <= 0:
        raise DomainError(f"gamma_rate requires alpha > 0, got {alpha}")
    return _kernel_pair(b, alpha, m, u).down


def name_rates(
    b: BathSpec,
    p: Protocol,
    coeffs: QuadratureCoefficients,
    t: float,
    include_xi_sq: bool = True,
    memory_correction: bool = False,
    u: UnitSystem = ATOMIC,
) -> RatePair:
    """Time-dependent rates (k_down, k_up) of the non-adiabatic dissipator.

    k_down = g^2 * xi(t)^2 * gamma(alpha(t)) / c and k_up likewise with
    Nbar in place of Nbar+1, which enforces k_up = k_down exp(-hbar alpha/kB T).
    With memory_correction the evaluation frequency becomes alpha_bar and the
    xi^2 prefactor picks up the + mu tau_B omega0 / 2 term (the prefactor
    correction only makes sense together with xi^2 and is skipped when
    include_xi_sq is false).
    """
    if memory_correction:
        nu = alpha_bar_at(p, t, b.tau_B)
    else:
        nu = alpha_at(p, t)
    seg = p._segment_at(t)
    if include_xi_sq:
        pref = coeffs.omega0 / omega_at(p, t)
        if memory_correction:
            pref += 0.5 * seg.mu * b.tau_B * coeffs.omega0
    else:
        pref = 1.0
    scale = b.g ** 2 * pref / coeffs.c
    kernels = _kernel_pair(b, nu, coeffs.mass, u)
    return RatePair(scale * kernels.down, scale * kernels.up)


def adiabatic_rates(
    b: BathSpec, p: Protocol, t: float, m: float, u: UnitSystem = ATOMIC
) -> RatePair:
    """Rates of the adiabatic master equation at the instantaneous frequency.

    k_down^adi = g^2 * gamma(omega(t)) * hbar / (2 m omega(t)): the mu -> 0
    limit of name_rates.
    """
    w = omega_at(p, t)
    scale = b.g ** 2 * u.hbar / (2.0 * m * w)
    kernels = _kernel_pair(b, w, m, u)
    return RatePair(scale * kernels.down, scale * kernels.up)


def rate_ratio_adiabatic(
    b: BathSpec, p: Protocol, t: float, u: UnitSystem = ATOMIC
) -> tuple[float, float]:
    """(k_down/k_down^adi, k_up/k_up^adi) at time t.

    For the momentum-coupled models this reduces to
    J(alpha)(Nbar(alpha)+1) / (J(omega)(Nbar(omega)+1)) and the Nbar analog.
    """
    w = omega_at(p, t)
    a = alpha_at(p, t)
    k = 2.0 * a / w  # = kappa
    m_ref = 1.0  # kernels scale identically in m; any mass cancels
    num = _kernel_pair(b, a, m_ref, u)
    den = _kernel_pair(b, w, m_ref, u)
    if den.down == 0.0:
        raise DomainError(f"adiabatic rate vanishes at t = {t} (J(omega) = 0)")
    down_ratio = (2.0 / k) * num.down / den.down
    if den.up == 0.0:
        raise DomainError(
            f"up-rate ratio undefined at t = {t} (k_up vanishes; T = 0?)"
        )
    up_ratio = (2.0 / k) * num.up / den.up
    return down_ratio, up_ratio
