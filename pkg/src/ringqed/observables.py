"""Physical quantities extracted from a density matrix.

Photon numbers are reported in both mode bases through the exact bilinear
relations (no adiabatic assumption): with a_CW = (a_S + i a_A)/sqrt(2) and
a_CCW = (a_S - i a_A)/sqrt(2),

    n_CW  = (n_S + n_A)/2 - Im <a_S† a_A>,
    n_CCW = (n_S + n_A)/2 + Im <a_S† a_A>,

and symmetrically for n_S/n_A from the CW/CCW pair.  The well populations
are reported both in the localized (L, R) and the extended (+, -) basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import (
    DensityMatrix,
    SpaceLayout,
    annihilation,
    embed,
    partial_trace,
)
from .errors import DimensionError, LayoutError


@dataclass(frozen=True)
class ObservableRecord:
    """All scalar observables plotted anywhere in this package."""

    n_CW: float
    n_CCW: float
    n_S: float
    n_A: float
    n_tot: float
    alpha_CW: complex
    alpha_CCW: complex
    alpha_S: complex
    alpha_A: complex
    rho_L: float
    rho_R: float
    rho_pp: float
    rho_mm: float
    coh_pm: complex
    directionality: float


_HAD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)


def _mode_ops(layout: SpaceLayout):
    """(a_CW, a_CCW, a_S, a_A) as full-space matrices for either layout."""
    if "modeCW" in layout:
        a_cw = embed(layout, {"modeCW": annihilation(layout.dim_of("modeCW") - 1)})
        a_ccw = embed(layout, {"modeCCW": annihilation(layout.dim_of("modeCCW") - 1)})
        a_s = (a_cw + a_ccw) / np.sqrt(2.0)
        a_a = -1j * (a_cw - a_ccw) / np.sqrt(2.0)
    elif "modeS" in layout:
        a_s = embed(layout, {"modeS": annihilation(layout.dim_of("modeS") - 1)})
        a_a = embed(layout, {"modeA": annihilation(layout.dim_of("modeA") - 1)})
        a_cw = (a_s + 1j * a_a) / np.sqrt(2.0)
        a_ccw = (a_s - 1j * a_a) / np.sqrt(2.0)
    else:
        raise LayoutError("layout carries no photon modes")
    return a_cw, a_ccw, a_s, a_a


def photon_numbers(rho: DensityMatrix, layout: SpaceLayout | None = None):
    """(n_CW, n_CCW, n_S, n_A, n_tot); the sum identity holds to 1e-12."""
    layout = layout or rho.layout
    a_cw, a_ccw, a_s, a_a = _mode_ops(layout)
    m = rho.matrix
    n_cw = float(np.einsum("ij,ji->", a_cw.conj().T @ a_cw, m).real)
    n_ccw = float(np.einsum("ij,ji->", a_ccw.conj().T @ a_ccw, m).real)
    n_s = float(np.einsum("ij,ji->", a_s.conj().T @ a_s, m).real)
    n_a = float(np.einsum("ij,ji->", a_a.conj().T @ a_a, m).real)
    return n_cw, n_ccw, n_s, n_a, n_cw + n_ccw


def field_amplitudes(rho: DensityMatrix, layout: SpaceLayout | None = None):
    """(alpha_CW, alpha_CCW, alpha_S, alpha_A) = <a_mu>."""
    layout = layout or rho.layout
    ops = _mode_ops(layout)
    return tuple(complex(np.einsum("ij,ji->", op, rho.matrix)) for op in ops)


def directionality(rho: DensityMatrix, layout: SpaceLayout | None = None,
                   n0: float = 1.0) -> float:
    """(n_CW - n_CCW) / n0, normalized by the analytic fixed-atom photon
    number so the quantity stays finite near destructive interference."""
    if n0 <= 0:
        raise DimensionError("directionality normalization n0 must be positive")
    n_cw, n_ccw, *_ = photon_numbers(rho, layout)
    return (n_cw - n_ccw) / n0


def external_state(rho: DensityMatrix, layout: SpaceLayout | None = None):
    """Reduced 2x2 well state plus (rho_L, rho_R, coh_pm).

    Returns ``(rho_ext_pm, rho_L, rho_R, coh_pm)`` where ``rho_ext_pm`` is
    the reduced matrix in the (+, -) basis and ``coh_pm = <+|rho|->``.  The
    external factor is read in the (L, R) basis on lab-frame layouts (any
    layout carrying an internal or traveling-mode factor) and in the (+, -)
    basis otherwise, matching the model builders' conventions.
    """
    layout = layout or rho.layout
    if "external" not in layout:
        raise LayoutError("layout has no external factor")
    red = partial_trace(rho, ["external"]).matrix
    if "modeCW" in layout or "internal" in layout:
        rho_lr = red
        rho_pm = _HAD @ red @ _HAD.conj().T
    else:
        rho_pm = red
        rho_lr = _HAD.conj().T @ red @ _HAD
    rho_l = float(rho_lr[0, 0].real)
    rho_r = float(rho_lr[1, 1].real)
    return rho_pm, rho_l, rho_r, complex(rho_pm[0, 1])


def record(rho: DensityMatrix, n0: float = 1.0) -> ObservableRecord:
    """Bundle every observable for one state."""
    layout = rho.layout
    n_cw, n_ccw, n_s, n_a, n_tot = photon_numbers(rho, layout)
    al_cw, al_ccw, al_s, al_a = field_amplitudes(rho, layout)
    rho_pm, rho_l, rho_r, coh = external_state(rho, layout)
    return ObservableRecord(
        n_CW=n_cw, n_CCW=n_ccw, n_S=n_s, n_A=n_a, n_tot=n_tot,
        alpha_CW=al_cw, alpha_CCW=al_ccw, alpha_S=al_s, alpha_A=al_a,
        rho_L=rho_l, rho_R=rho_r,
        rho_pp=float(rho_pm[0, 0].real), rho_mm=float(rho_pm[1, 1].real),
        coh_pm=coh,
        directionality=(n_cw - n_ccw) / n0 if n0 > 0 else np.nan,
    )
