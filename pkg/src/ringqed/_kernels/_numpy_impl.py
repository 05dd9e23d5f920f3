"""Pure-numpy Dormand-Prince 5(4) stepper for the Lindblad right-hand side.

This is the fallback twin of the compiled extension ``_rk45``; both expose
``rk45_lindblad`` with identical semantics.  The state is propagated as a
Hermitian d x d matrix under

    drho/dt = h_nh rho + rho h_nh† + sum_k rates[k] L_k rho L_k†

with ``h_nh = -iH - (1/2) sum_k rates[k] L_k† L_k``.  Hermiticity of the
state is an invariant maintained by construction (the drift is evaluated as
``T + T†``) plus an explicit re-hermitization after every accepted step.
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
])

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2


class _Rhs:
    def __init__(self, h_nh, ls, rates):
        self.h_nh = np.ascontiguousarray(h_nh, dtype=complex)
        self.ls = np.ascontiguousarray(ls, dtype=complex)
        self.rates = np.asarray(rates, dtype=float)
        self.nfev = 0

    def __call__(self, y, out):
        tmp = self.h_nh @ y
        np.conjugate(tmp.T, out=out)  # out = (h_nh y)†
        out += tmp
        for lop, r in zip(self.ls, self.rates):
            if r == 0.0:
                continue
            ly = lop @ y
            out += r * (ly @ lop.conj().T)
        self.nfev += 1
        return out


def _error_norm(err, y, ynew, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return float(np.sqrt(np.mean((np.abs(err) / scale) ** 2)))


def _initial_step(rhs, y0, t_span, rtol, atol, max_step):
    d = y0.shape[0]
    f0 = rhs(y0, np.empty_like(y0))
    scale = atol + rtol * np.abs(y0)
    d0 = float(np.sqrt(np.mean((np.abs(y0) / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((np.abs(f0) / scale) ** 2)))
    h0 = 1e-6 * t_span if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = rhs(y1, np.empty_like(y0))
    d2 = float(np.sqrt(np.mean((np.abs(f1 - f0) / scale) ** 2))) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step, t_span)


def rk45_lindblad(h_nh, ls, rates, rho0, t_grid, rtol=1e-8, atol=1e-10,
                  max_step=np.inf, first_step=0.0, max_steps=20_000_000):
    """Integrate the Lindblad RHS, returning snapshots at ``t_grid``.

    Returns ``(out, info)`` where ``out[k]`` is the state at ``t_grid[k]``
    and info carries step statistics and a status code.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    m = t_grid.shape[0]
    d = rho0.shape[0]
    rhs = _Rhs(h_nh, ls, rates)
    out = np.empty((m, d, d), dtype=complex)
    y = np.ascontiguousarray(rho0, dtype=complex).copy()
    y = 0.5 * (y + y.conj().T)
    out[0] = y
    info = {"nsteps": 0, "naccept": 0, "nreject": 0, "status": STATUS_OK,
            "t_reached": float(t_grid[0])}
    if m == 1:
        info["nfev"] = 0
        return out, info

    t = float(t_grid[0])
    t_end = float(t_grid[-1])
    span = t_end - t
    h = first_step if first_step > 0 else _initial_step(rhs, y, span, rtol, atol, max_step)
    k = np.empty((7, d, d), dtype=complex)
    idx = 1
    rhs(y, k[0])

    while idx < m:
        if info["nsteps"] >= max_steps:
            info["status"] = STATUS_MAX_STEPS
            break
        t_target = float(t_grid[idx])
        h = min(h, max_step, t_target - t)
        if h < 1e-13 * max(1.0, abs(t)):
            info["status"] = STATUS_STEP_UNDERFLOW
            break
        for stage in range(1, 7):
            ytmp = y + h * np.tensordot(_A[stage], k[:stage], axes=(0, 0))
            rhs(ytmp, k[stage])
        ynew = y + h * np.tensordot(_B5, k, axes=(0, 0))
        err = h * np.tensordot(_E, k, axes=(0, 0))
        enorm = _error_norm(err, y, ynew, rtol, atol)
        info["nsteps"] += 1
        if enorm <= 1.0:
            t = t + h
            y = 0.5 * (ynew + ynew.conj().T)
            info["naccept"] += 1
            info["t_reached"] = t
            if t >= t_target - 1e-14 * max(1.0, abs(t_target)):
                t = t_target
                out[idx] = y
                idx += 1
            rhs(y, k[0])
            factor = 10.0 if enorm == 0.0 else min(10.0, max(0.2, 0.9 * enorm ** -0.2))
            h = h * factor
        else:
            info["nreject"] += 1
            h = h * min(1.0, max(0.1, 0.9 * enorm ** -0.2))
    info["nfev"] = rhs.nfev
    return out, info


def lindblad_apply(h_nh, ls, rates, rho):
    """Single RHS evaluation with the Hermitian-state fast path."""
    rhs = _Rhs(h_nh, ls, rates)
    return rhs(np.asarray(rho, dtype=complex), np.empty_like(np.asarray(rho, dtype=complex)))
