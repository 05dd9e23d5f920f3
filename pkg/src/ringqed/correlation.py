"""Two-time second-order correlation of either propagating mode.

Schroedinger-picture evaluation from the steady state: condition on one
detection, rho'(0) = a rho_ss a† / Tr[a†a rho_ss], evolve rho' under the
full generator and read g2(tau) = Tr[a†a rho'(tau)] / Tr[a†a rho_ss].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import DensityMatrix, Operator
from .engine import EvolutionSpec, evolve
from .errors import DimensionError, UnmeasurableModeError
from .observables import _mode_ops

OCCUPATION_FLOOR = 1e-12


@dataclass(frozen=True)
class G2Series:
    """g2 samples on a delay grid starting at zero."""

    tau_grid: np.ndarray
    values: np.ndarray
    mode: str

    def __post_init__(self):
        tg = np.asarray(self.tau_grid, dtype=float)
        if tg[0] != 0.0:
            raise DimensionError("tau_grid must start at 0")
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DimensionError("g2 values must be finite")
        object.__setattr__(self, "tau_grid", tg)
        object.__setattr__(self, "values", vals)


def mode_operator(layout, mode: str) -> np.ndarray:
    a_cw, a_ccw, a_s, a_a = _mode_ops(layout)
    try:
        return {"CW": a_cw, "CCW": a_ccw, "S": a_s, "A": a_a}[mode]
    except KeyError:
        raise DimensionError(f"unknown mode {mode!r}") from None


def g2_numeric(h: Operator, jumps, rho_ss: DensityMatrix, mode: str,
               tau_grid, rtol: float = 1e-8, atol: float = 1e-12) -> G2Series:
    """g2(tau) of the CW or CCW mode from a steady state.

    Raises :class:`UnmeasurableModeError` when the mode's steady occupation
    is below 1e-12.  The conditioned state is re-hermitized before the
    evolution (same drift control as the main integrator).
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    a = mode_operator(h.layout, mode)
    nop = a.conj().T @ a
    nbar = float(np.einsum("ij,ji->", nop, rho_ss.matrix).real)
    if nbar <= OCCUPATION_FLOOR:
        raise UnmeasurableModeError(
            f"steady occupation of mode {mode} is {nbar:.2e}; g2 undefined"
        )
    conditioned = a @ rho_ss.matrix @ a.conj().T / nbar
    rho1 = DensityMatrix.from_matrix(h.layout, conditioned, normalize=True)
    if tau_grid.size == 1:
        vals = np.array([float(np.einsum("ij,ji->", nop, rho1.matrix).real) / nbar])
        return G2Series(tau_grid=tau_grid, values=np.maximum(vals, 0.0), mode=mode)
    traj = evolve(rho1, h, jumps, EvolutionSpec(t_grid=tau_grid, rtol=rtol, atol=atol))
    vals = np.array([
        float(np.einsum("ij,ji->", nop, s.matrix).real) / nbar for s in traj.states
    ])
    return G2Series(tau_grid=tau_grid, values=np.maximum(vals, 0.0), mode=mode)


def g2_zero(h: Operator, jumps, rho_ss: DensityMatrix, mode: str) -> float:
    """Equal-time g2(0); pure algebra on the steady state."""
    return float(g2_numeric(h, jumps, rho_ss, mode, np.array([0.0])).values[0])
