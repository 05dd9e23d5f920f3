"""Master-equation integration, steady states and slow-mode propagation.

Three propagation tools live here:

* :func:`evolve` -- adaptive Dormand-Prince 5(4) on the density matrix,
  re-hermitized after every accepted step (the default integrator; runs on
  the compiled kernel when available).
* :func:`steady_state` -- either integrate-to-convergence on the residual
  ``||d rho/dt||_F`` or a direct sparse solve of the vectorized generator's
  kernel (trace-normalized nullspace vector).
* :func:`spectral_tail` -- for horizons far beyond ``1/kappa``: integrate
  through the fast transient, then expand the remaining dynamics in the few
  slow eigenmodes of the generator obtained by shift-inverted subspace
  iteration.  Exact for linear dynamics once the fast modes have died; used
  by the long-time relaxation and frequency-shift fits.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _kernels
from .algebra import DensityMatrix, Operator, SpaceLayout
from .errors import (
    ConvergenceError,
    DegenerateSteadyStateError,
    DimensionError,
    IntegrationError,
    LayoutError,
)

TRACE_DRIFT_TOL = 1e-9


@dataclass(frozen=True)
class EvolutionSpec:
    """Time grid (units 1/kappa) and integrator tolerances."""

    t_grid: np.ndarray
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf

    def __post_init__(self):
        tg = np.asarray(self.t_grid, dtype=float)
        if tg.ndim != 1 or tg.size < 1:
            raise DimensionError("t_grid must be a 1-d array of times")
        if tg.size > 1 and not np.all(np.diff(tg) > 0):
            raise DimensionError("t_grid must be strictly increasing")
        if self.rtol <= 0 or self.atol <= 0:
            raise DimensionError("rtol and atol must be positive")
        object.__setattr__(self, "t_grid", tg)


@dataclass(frozen=True)
class SteadySpec:
    """Steady-state search configuration.

    ``method`` is ``integrate`` (march until ``||d rho/dt||_F <= conv_tol``)
    or ``nullspace`` (direct kernel solve of the vectorized generator).
    ``conv_tol`` defaults to ``1e-10 * dim`` at solve time.
    """

    method: str = "integrate"
    conv_tol: float | None = None
    t_cap: float = 1e3

    def __post_init__(self):
        if self.method not in ("integrate", "nullspace"):
            raise DimensionError(f"unknown steady-state method {self.method!r}")
        if self.conv_tol is not None and self.conv_tol <= 0:
            raise DimensionError("conv_tol must be positive")


@dataclass
class Trajectory:
    """Snapshots of the state on a time grid, plus integrator statistics."""

    times: np.ndarray
    states: list[DensityMatrix]
    meta: dict = field(default_factory=dict)

    def expect(self, obs) -> np.ndarray:
        from .algebra import expectation

        return np.array([expectation(obs, s) for s in self.states])

    def __len__(self):
        return len(self.states)


def _prepare(h: Operator, jumps: Sequence[tuple[Operator, float]]):
    d = h.dim
    mats = []
    rates = []
    for op, rate in jumps:
        if op.layout != h.layout:
            raise LayoutError("jump operator layout differs from Hamiltonian")
        mats.append(op.matrix)
        rates.append(float(rate))
    ls = np.array(mats, dtype=complex) if mats else np.zeros((0, d, d), dtype=complex)
    rates = np.asarray(rates, dtype=float)
    h_nh = -1j * h.matrix.astype(complex)
    for lop, r in zip(ls, rates):
        h_nh = h_nh - 0.5 * r * (lop.conj().T @ lop)
    return np.ascontiguousarray(h_nh), np.ascontiguousarray(ls), rates


def lindblad_rhs(rho, h: Operator, jumps: Sequence[tuple[Operator, float]]) -> np.ndarray:
    """General Lindblad generator action -i[H,rho] + sum_k r_k D[L_k]rho.

    Valid for arbitrary (not necessarily Hermitian) matrix arguments, unlike
    the Hermitian fast path used inside the integrator kernels.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if m.shape != h.matrix.shape:
        raise LayoutError("state dimension does not match Hamiltonian")
    if isinstance(rho, DensityMatrix) and rho.layout != h.layout:
        raise LayoutError("state layout does not match Hamiltonian")
    out = -1j * (h.matrix @ m - m @ h.matrix)
    for op, rate in jumps:
        lm = op.matrix
        lml = lm.conj().T @ lm
        out = out + rate * (lm @ m @ lm.conj().T - 0.5 * (lml @ m + m @ lml))
    return out


def residual_norm(rho: DensityMatrix, h: Operator, jumps) -> float:
    """Frobenius norm of d rho / dt at the given state."""
    return float(np.linalg.norm(lindblad_rhs(rho, h, jumps)))


def evolve(rho0: DensityMatrix, h: Operator, jumps: Sequence[tuple[Operator, float]],
           spec: EvolutionSpec) -> Trajectory:
    """Integrate the master equation, sampling at ``spec.t_grid``.

    Raises :class:`IntegrationError` (carrying the last good time) on step
    underflow, and checks that the trace drifted by less than 1e-9.
    """
    if rho0.layout != h.layout:
        raise LayoutError("initial state layout does not match Hamiltonian")
    h_nh, ls, rates = _prepare(h, jumps)
    out, info = _kernels.rk45_lindblad(
        h_nh, ls, rates, rho0.matrix, spec.t_grid,
        rtol=spec.rtol, atol=spec.atol, max_step=spec.max_step,
    )
    if info["status"] == _kernels.STATUS_STEP_UNDERFLOW:
        raise IntegrationError(
            f"step size underflow at t = {info['t_reached']:.6g}",
            t_reached=info["t_reached"],
        )
    if info["status"] == _kernels.STATUS_MAX_STEPS:
        raise IntegrationError(
            f"step budget exhausted at t = {info['t_reached']:.6g}",
            t_reached=info["t_reached"],
        )
    drift = max(abs(np.trace(out[k]).real - 1.0) for k in range(out.shape[0]))
    if drift > TRACE_DRIFT_TOL:
        raise IntegrationError(f"trace drift {drift:.2e} exceeds {TRACE_DRIFT_TOL}")
    states = [DensityMatrix.from_matrix(h.layout, out[k]) for k in range(out.shape[0])]
    meta = dict(info)
    meta.update(rtol=spec.rtol, atol=spec.atol, backend=_kernels.KERNEL_BACKEND)
    return Trajectory(times=spec.t_grid.copy(), states=states, meta=meta)


def liouvillian(h: Operator, jumps: Sequence[tuple[Operator, float]],
                *, sparse: bool = True):
    """Vectorized generator L with d(vec rho)/dt = L vec(rho).

    Row-major vec convention: vec(A rho B) = (A kron B^T) vec(rho).
    """
    d = h.dim
    eye = sp.identity(d, dtype=complex, format="csr")
    hs = sp.csr_matrix(h.matrix)
    lsup = -1j * (sp.kron(hs, eye) - sp.kron(eye, hs.T))
    for op, rate in jumps:
        lm = sp.csr_matrix(op.matrix)
        lml = sp.csr_matrix(op.matrix.conj().T @ op.matrix)
        lsup = lsup + rate * (
            sp.kron(lm, lm.conj())
            - 0.5 * (sp.kron(lml, eye) + sp.kron(eye, lml.T))
        )
    return lsup.tocsc() if sparse else lsup.toarray()


def _nullspace_steady(h: Operator, jumps, conv_tol: float) -> DensityMatrix:
    d = h.dim
    lsup = liouvillian(h, jumps)
    n = d * d
    # replace the first row with the trace constraint; the dropped generator
    # row is linearly dependent for a trace-preserving generator
    m = lsup.tolil()
    tr_row = np.zeros(n, dtype=complex)
    tr_row[np.arange(d) * (d + 1)] = 1.0
    m[0, :] = tr_row
    b = np.zeros(n, dtype=complex)
    b[0] = 1.0
    try:
        lu = spla.splu(m.tocsc())
        x = lu.solve(b)
        x = x + lu.solve(b - m.tocsc() @ x)
    except RuntimeError as exc:  # singular factorization: degenerate kernel
        raise DegenerateSteadyStateError(
            f"trace-constrained solve failed ({exc}); "
            "the steady state is likely degenerate"
        ) from None
    rho = x.reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise DegenerateSteadyStateError("kernel vector is traceless")
    rho /= tr
    resid = float(np.linalg.norm(lsup @ rho.reshape(-1)))
    if not np.isfinite(resid) or resid > conv_tol:
        if d <= 40:
            return _dense_nullspace_steady(lsup.toarray(), d, h.layout, conv_tol)
        raise DegenerateSteadyStateError(
            f"nullspace residual {resid:.2e} exceeds {conv_tol:.2e}; "
            "kernel may not be one dimensional"
        )
    state = DensityMatrix.from_matrix(h.layout, rho)
    emin = state.min_eigenvalue()
    if emin < -1e-6:
        # the solve landed on an indefinite kernel combination: the kernel
        # is (near-)degenerate even though the residual is tiny
        if d <= 40:
            return _dense_nullspace_steady(lsup.toarray(), d, h.layout, conv_tol)
        raise DegenerateSteadyStateError(
            f"kernel vector is indefinite (min eigenvalue {emin:.2e}); "
            "the steady state is likely degenerate"
        )
    if emin < -1e-8:
        warnings.warn(f"steady state has negative eigenvalue {emin:.2e}", stacklevel=2)
    return state


def _dense_nullspace_steady(lmat: np.ndarray, d: int, layout, conv_tol: float):
    u, s, vh = np.linalg.svd(lmat)
    tol = max(s[0], 1.0) * d * d * np.finfo(float).eps * 10
    kdim = int(np.sum(s < tol))
    if kdim == 0:
        raise DegenerateSteadyStateError("no kernel vector found")
    if kdim > 1:
        raise DegenerateSteadyStateError(
            f"steady state degenerate: kernel dimension {kdim}"
        )
    rho = vh[-1].conj().reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise DegenerateSteadyStateError("kernel vector is traceless")
    rho /= tr
    resid = float(np.linalg.norm(lmat @ rho.reshape(-1)))
    if resid > conv_tol:
        raise DegenerateSteadyStateError(f"nullspace residual {resid:.2e} too large")
    return DensityMatrix.from_matrix(layout, rho)


def steady_state(h: Operator, jumps: Sequence[tuple[Operator, float]],
                 spec: SteadySpec = SteadySpec(),
                 rho0: DensityMatrix | None = None) -> DensityMatrix:
    """Stationary state of the generator.

    ``integrate`` marches from ``rho0`` (default: maximally mixed) in
    growing chunks until the residual drops below ``conv_tol``, raising
    :class:`ConvergenceError` at ``t_cap``.  ``nullspace`` solves the
    vectorized generator directly and raises
    :class:`DegenerateSteadyStateError` when the kernel is not unique.
    """
    if not any(rate > 0 for _, rate in jumps):
        raise DimensionError("steady_state needs at least one dissipative channel")
    d = h.dim
    conv_tol = spec.conv_tol if spec.conv_tol is not None else 1e-10 * d
    if spec.method == "nullspace":
        return _nullspace_steady(h, jumps, conv_tol)

    state = rho0 if rho0 is not None else DensityMatrix.from_matrix(
        h.layout, np.eye(d, dtype=complex) / d
    )
    t = 0.0
    chunk = 5.0
    resid = np.inf
    while t < spec.t_cap:
        chunk = min(chunk, spec.t_cap - t)
        traj = evolve(state, h, jumps, EvolutionSpec(t_grid=np.array([t, t + chunk])))
        state = traj.states[-1]
        t += chunk
        resid = residual_norm(state, h, jumps)
        if resid <= conv_tol:
            return state
        chunk = min(chunk * 2.0, 200.0)
    raise ConvergenceError(
        f"no steady state below residual {conv_tol:.2e} within t_cap = {spec.t_cap}"
        f" (residual {resid:.2e})",
        residual=resid,
        t_reached=t,
    )


# ---------------------------------------------------------------------------
# slow-mode expansion for long-horizon dynamics
# ---------------------------------------------------------------------------

def _subspace_modes(lsup, sigma: complex, k: int, n_iter: int = 8,
                    seed_vectors: np.ndarray | None = None):
    """Eigenpairs of the sparse generator nearest ``sigma``.

    Deterministic block inverse (shift-invert) subspace iteration followed
    by a Rayleigh-Ritz projection; the spectral gaps after inversion are
    several decades for the generators here, so a handful of iterations
    converges to solver precision.
    """
    n = lsup.shape[0]
    shifted = (lsup - sigma * sp.identity(n, dtype=complex, format="csc")).tocsc()
    lu = spla.splu(shifted)
    if seed_vectors is not None:
        x = np.asarray(seed_vectors, dtype=complex)
    else:
        # deterministic full-rank start: sinusoids of incommensurate frequency
        idx = np.arange(n)
        x = np.stack([
            np.exp(2j * np.pi * (j + 1) * idx / (n + 0.5)) + (1.0 if j == 0 else 0.0)
            for j in range(k)
        ], axis=1)
    x, _ = np.linalg.qr(x)
    for _ in range(n_iter):
        x = lu.solve(x)
        x, _ = np.linalg.qr(x)
    small = x.conj().T @ (lsup @ x)
    w, y = np.linalg.eig(small)
    vecs = x @ y
    vecs /= np.linalg.norm(vecs, axis=0, keepdims=True)
    resid = np.linalg.norm(lsup @ vecs - vecs * w[None, :], axis=0)
    return w, vecs, resid


@dataclass
class SpectralTail:
    """State beyond a switch time as sum_k c_k e^{lambda_k (t - t0)} V_k."""

    layout: SpaceLayout
    t0: float
    eigvals: np.ndarray          # (k,)
    modes: np.ndarray            # (k, d, d)
    coeffs: np.ndarray           # (k,)
    fit_residual: float

    def state_matrix(self, t: float) -> np.ndarray:
        w = self.coeffs * np.exp(self.eigvals * (t - self.t0))
        return np.tensordot(w, self.modes, axes=(0, 0))

    def state(self, t: float) -> DensityMatrix:
        return DensityMatrix.from_matrix(self.layout, self.state_matrix(t), normalize=True)

    def expect(self, obs, times) -> np.ndarray:
        """Tr(O rho(t)) on an arbitrary time array, O(k) per sample."""
        m = obs.matrix if isinstance(obs, Operator) else np.asarray(obs, dtype=complex)
        per_mode = np.einsum("ij,kji->k", m, self.modes)
        times = np.asarray(times, dtype=float)
        phases = np.exp(np.outer(times - self.t0, self.eigvals))
        return phases @ (self.coeffs * per_mode)

    def slowest_decay(self) -> float:
        """Smallest nonzero decay rate present in the expansion."""
        rates = -self.eigvals.real
        rates = rates[rates > 1e-14]
        return float(rates.min()) if rates.size else 0.0


def slow_modes(h: Operator, jumps, sigmas: Sequence[complex], k_per_sigma: int = 4,
               resid_tol: float = 1e-8):
    """Slow eigenmodes of the generator near each shift in ``sigmas``.

    Modes with relative residual above ``resid_tol`` are dropped;
    conjugate-pair completion is applied afterwards (the generator maps
    Hermitian to Hermitian, so eigenvalues come in conjugate pairs whose
    eigenmatrices are mutual adjoints).
    """
    lsup = liouvillian(h, jumps)
    scale = spla.norm(lsup, np.inf)
    d = h.dim
    found: list[tuple[complex, np.ndarray]] = []

    def _register(w, v):
        for lam, vec in found:
            if abs(w - lam) < 1e-8 * max(1.0, abs(w)):
                return
        found.append((w, vec_to_mat(v, d)))

    def vec_to_mat(v, d):
        return v.reshape(d, d)

    for sigma in sigmas:
        w, vecs, resid = _subspace_modes(lsup, sigma + 1e-9 + 1e-9j, k_per_sigma)
        for wi, vi, ri in zip(w, vecs.T, resid):
            if ri <= resid_tol * scale:
                _register(wi, vi)
    # conjugate completion
    for lam, mat in list(found):
        conj_lam = lam.conjugate()
        if abs(conj_lam - lam) < 1e-12:
            continue
        if not any(abs(conj_lam - l2) < 1e-8 * max(1.0, abs(lam)) for l2, _ in found):
            found.append((conj_lam, mat.conj().T))
    found.sort(key=lambda p: abs(p[0]))
    eigvals = np.array([p[0] for p in found])
    modes = np.array([p[1].reshape(-1) for p in found])
    return eigvals, modes.reshape(len(found), d, d)


def spectral_tail(rho0: DensityMatrix, h: Operator, jumps,
                  sigmas: Sequence[complex], t_switch: float = 30.0,
                  k_per_sigma: int = 4, rtol: float = 1e-9,
                  atol: float = 1e-12) -> SpectralTail:
    """Propagate through the fast transient, then expand in slow modes.

    The returned object evaluates states and observables at arbitrary
    ``t >= t_switch`` at negligible cost.  The least-squares residual of the
    slow-mode fit at the switch time is recorded; a warning is emitted when
    it exceeds 1e-6 (fast transients not yet dead, or modes missing).
    """
    traj = evolve(rho0, h, jumps, EvolutionSpec(
        t_grid=np.array([0.0, t_switch]), rtol=rtol, atol=atol))
    rho_sw = traj.states[-1]
    eigvals, modes = slow_modes(h, jumps, sigmas, k_per_sigma)
    if eigvals.size == 0:
        raise ConvergenceError("no slow modes found near the requested shifts")
    basis = modes.reshape(eigvals.size, -1).T
    target = rho_sw.matrix.reshape(-1)
    coeffs, *_ = np.linalg.lstsq(basis, target, rcond=None)
    resid = float(np.linalg.norm(basis @ coeffs - target))
    if resid > 1e-6:
        warnings.warn(
            f"slow-mode expansion residual {resid:.2e}; "
            "increase t_switch or add shifts",
            stacklevel=2,
        )
    return SpectralTail(
        layout=h.layout, t0=t_switch, eigvals=eigvals, modes=modes,
        coeffs=coeffs, fit_residual=resid,
    )
