"""Closed-form dispersive-regime results, used as science output and as
independent test oracles for the numeric engine.

Everything here is plain arithmetic on :class:`ringqed.model.SystemParams`;
no model matrices or integrators are shared with the numeric path, so
agreement between the two is evidence rather than tautology.

Conventions match :mod:`ringqed.model`: external basis (+, -) with
``sigma+_ext = |-><+|``, ``rho_ext^{+-} = <+|rho|->``, and the well
coherence of the initial state |L> equal to 1/2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SingularRateError
from .model import SystemParams


@dataclass(frozen=True)
class RateSet:
    """Light-induced coherent shifts and transfer rates of the well state."""

    J_plus: float
    J_minus: float
    Gamma_plus: float
    Gamma_minus: float
    J_prime: float

    @property
    def Gamma(self) -> float:
        return self.Gamma_plus + self.Gamma_minus


@dataclass(frozen=True)
class MotionalState:
    """Bloch vector of the well state and its 2x2 matrix in the (+,-) basis."""

    sx: float
    sy: float
    sz: float
    rho_ext: np.ndarray


@dataclass(frozen=True)
class AdiabaticFields:
    alpha_S: complex
    alpha_A: complex
    n_S: float
    n_A: float
    n_CW: float
    n_CCW: float


@dataclass(frozen=True)
class PerturbativeSS:
    """Parity-sector probabilities and the twelve leading state amplitudes.

    ``c[(n_S, n_A, sector)]`` holds the amplitude of |n_S, n_A, sector> in
    the pure state of the sector's parity branch; sector is '+' or '-'.
    """

    P_plus: float
    P_minus: float
    c: dict


def _drive(p: SystemParams) -> float:
    """Half the effective drive, Omega_eff / 2."""
    return 0.5 * p.omega_eff


def n0(p: SystemParams) -> float:
    """Steady photon number for an atom pinned at one well site."""
    denom = p.delta ** 2 + p.kappa ** 2 / 4.0
    if denom == 0:
        raise SingularRateError("n0 diverges: delta and kappa both zero")
    u = _drive(p)
    return u * u / denom


def n_tot_steady(p: SystemParams) -> float:
    """Steady total photon number: interference fringe formula.

    n0 [cos^2(phi/2) + sin^2(phi/2) / (1 + 4 J^2/(delta^2 + kappa^2/4))].
    """
    lor = 1.0 / (1.0 + 4.0 * p.J ** 2 / (p.delta ** 2 + p.kappa ** 2 / 4.0))
    return n0(p) * (np.cos(p.phi / 2) ** 2 + lor * np.sin(p.phi / 2) ** 2)


def rates(p: SystemParams) -> RateSet:
    """Transfer rates Gamma_pm and shifts J_pm of the well master equation.

    J_pm - i Gamma_pm / 2 = (Omega_eff^2/4) sin^2(phi/2) / (delta -+ 2J + i kappa/2),
    and J' = J - (J_+ - J_-)/2.  A positive kappa regularizes all poles.
    """
    u2s2 = _drive(p) ** 2 * np.sin(p.phi / 2) ** 2
    zp = u2s2 / (p.delta - 2 * p.J + 1j * p.kappa / 2)
    zm = u2s2 / (p.delta + 2 * p.J + 1j * p.kappa / 2)
    j_plus, gamma_plus = float(zp.real), float(-2.0 * zp.imag)
    j_minus, gamma_minus = float(zm.real), float(-2.0 * zm.imag)
    return RateSet(
        J_plus=j_plus, J_minus=j_minus,
        Gamma_plus=gamma_plus, Gamma_minus=gamma_minus,
        J_prime=p.J - (j_plus - j_minus) / 2.0,
    )


def motional_solution(p: SystemParams, t) -> MotionalState:
    """Semiclassical well dynamics from the initial state |L>.

    <sx> = e^{-Gamma t/2} cos 2J't, <sy> = e^{-Gamma t/2} sin 2J't,
    <sz> = ((Gamma_- - Gamma_+)/Gamma)(1 - e^{-Gamma t}); Gamma = 0 is the
    undamped limit.  Scalar t only (vector users evaluate per element).
    """
    rs = rates(p)
    g = rs.Gamma
    envelope = np.exp(-0.5 * g * t)
    sx = envelope * np.cos(2 * rs.J_prime * t)
    sy = envelope * np.sin(2 * rs.J_prime * t)
    if g == 0.0:
        sz = 0.0
    else:
        sz = (rs.Gamma_minus - rs.Gamma_plus) / g * (1.0 - np.exp(-g * t))
    coh = 0.5 * (sx + 1j * sy)   # <+|rho|->
    rho_ext = np.array([
        [0.5 * (1 + sz), coh],
        [np.conj(coh), 0.5 * (1 - sz)],
    ])
    return MotionalState(sx=float(sx), sy=float(sy), sz=float(sz), rho_ext=rho_ext)


def adiabatic_fields(p: SystemParams, rho_ext: np.ndarray) -> AdiabaticFields:
    """Quasistatic cavity fields for a given well state (2x2, (+,-) basis).

    alpha_S = (Omega_eff/2) cos(phi/2) / (delta + i kappa/2);
    alpha_A couples the well coherences through the two Lorentzian poles at
    delta = -+2J; photon numbers carry the population-weighted Lorentzians
    and the CW/CCW split adds the Im interference cross term.
    """
    rho_ext = np.asarray(rho_ext, dtype=complex)
    u = _drive(p)
    s, c = np.sin(p.phi / 2), np.cos(p.phi / 2)
    dp = p.delta + 2 * p.J + 1j * p.kappa / 2
    dm = p.delta - 2 * p.J + 1j * p.kappa / 2
    d0 = p.delta + 1j * p.kappa / 2
    if min(abs(dp), abs(dm), abs(d0)) == 0:
        raise SingularRateError("adiabatic fields evaluated at an exact pole")
    rho_pp = rho_ext[0, 0].real
    rho_mm = rho_ext[1, 1].real
    rho_pm = rho_ext[0, 1]          # <sigma+_ext>
    rho_mp = rho_ext[1, 0]          # <sigma-_ext>
    alpha_s = u * c / d0
    alpha_a = u * s * (rho_mp / dp + rho_pm / dm)
    n_s = abs(u * c / d0) ** 2
    n_a = (u * s) ** 2 * (rho_mm / abs(dp) ** 2 + rho_pp / abs(dm) ** 2)
    cross = 4 * p.J * p.delta * np.sin(p.phi) / (dp * np.conj(dm))
    n0_val = n0(p)
    half = 0.5 * (n_s + n_a)
    n_cw = half + 0.5 * n0_val * np.imag(cross * rho_mp)
    n_ccw = half - 0.5 * n0_val * np.imag(cross * rho_mp)
    return AdiabaticFields(
        alpha_S=complex(alpha_s), alpha_A=complex(alpha_a),
        n_S=float(n_s), n_A=float(n_a),
        n_CW=float(n_cw), n_CCW=float(n_ccw),
    )


def g2_closed_resonant(p: SystemParams, tau) -> np.ndarray:
    """Equal-mode g2(tau) on cavity resonance (delta = 0).

    1 + [1 + (1 + 16J^2/kappa^2) cot^2(phi/2)]^{-2}
      x [(16J^2/kappa^2) e^{-kappa tau} + (8J/kappa) e^{-kappa tau/2} sin 2J tau].
    phi -> 0 returns the coherent-light limit 1 exactly.
    """
    tau = np.asarray(tau, dtype=float)
    s = np.sin(p.phi / 2)
    if s == 0.0:
        return np.ones_like(tau)
    cot2 = (np.cos(p.phi / 2) / s) ** 2
    b = 16.0 * p.J ** 2 / p.kappa ** 2
    pref = (1.0 + (1.0 + b) * cot2) ** -2
    osc = b * np.exp(-p.kappa * tau) \
        + (8.0 * p.J / p.kappa) * np.exp(-p.kappa * tau / 2) * np.sin(2 * p.J * tau)
    return 1.0 + pref * osc


def g2_closed(p: SystemParams, tau) -> np.ndarray:
    """Equal-mode g2(tau) for general drive-cavity detuning.

    Perturbative propagator result; reduces to the resonant formula at
    delta = 0 and to 1 + 16 J^2/kappa^2 at tau = 0, phi = pi.  phi -> 0
    returns 1 exactly (coherent light).
    """
    tau = np.asarray(tau, dtype=float)
    s = np.sin(p.phi / 2)
    if s == 0.0:
        return np.ones_like(tau)
    cot2 = (np.cos(p.phi / 2) / s) ** 2
    ik = 1j * p.kappa / 2
    d0 = p.delta + ik
    dp = p.delta + 2 * p.J + ik
    dm = p.delta - 2 * p.J + ik
    b = 1.0 + 4.0 * p.J ** 2 / (p.delta ** 2 + p.kappa ** 2 / 4.0)
    decay = np.exp(-1j * p.delta * tau - p.kappa * tau / 2)
    z1 = (d0 * np.exp(-2j * p.J * tau) + 2 * p.J * decay) / dp - cot2 * dm / d0
    z2 = (d0 * np.exp(+2j * p.J * tau) - 2 * p.J * decay) / dm - cot2 * dp / d0
    bracket = 0.5 * np.abs(z1) ** 2 + 0.5 * np.abs(z2) ** 2 \
        + 4.0 * cot2 * np.cos(p.J * tau) ** 2
    return b * (1.0 + b * cot2) ** -2 * bracket


def perturbative_ss(p: SystemParams) -> PerturbativeSS:
    """Leading perturbative steady state in the parity-sector form.

    P_pm = (1 -+ 4 delta J / (delta^2 + 4J^2 + kappa^2/4)) / 2 and the
    twelve state amplitudes of the two sector branches.
    """
    if not p.dispersive:
        warnings.warn("perturbative steady state outside the dispersive regime",
                      stacklevel=2)
    u = _drive(p)
    s, c = np.sin(p.phi / 2), np.cos(p.phi / 2)
    ik = 1j * p.kappa / 2
    d0 = p.delta + ik
    dp = p.delta + 2 * p.J + ik
    dm = p.delta - 2 * p.J + ik
    z = 4.0 * p.delta * p.J / (p.delta ** 2 + 4.0 * p.J ** 2 + p.kappa ** 2 / 4.0)
    c10 = u * c / d0
    c01m = u * s / dm
    c01p = u * s / dp
    two = np.sqrt(2.0) * u / (2.0 * p.delta + 1j * p.kappa)
    coeffs = {
        (0, 0, "+"): 1.0 + 0j, (0, 0, "-"): 1.0 + 0j,
        (1, 0, "+"): c10, (1, 0, "-"): c10,
        (0, 1, "-"): c01m, (0, 1, "+"): c01p,
        (1, 1, "-"): c10 * c01m, (1, 1, "+"): c10 * c01p,
        (2, 0, "+"): two * c * c10, (2, 0, "-"): two * c * c10,
        (0, 2, "+"): two * s * c01m, (0, 2, "-"): two * s * c01p,
    }
    return PerturbativeSS(P_plus=0.5 * (1.0 - z), P_minus=0.5 * (1.0 + z), c=coeffs)
