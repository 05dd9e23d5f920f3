"""Dense complex operator algebra on small tensor-product Hilbert spaces.

Everything is a plain ``numpy.ndarray`` of complex128 under the hood; the
:class:`SpaceLayout` carries the tensor-factor bookkeeping (which subsystem
lives on which axis and with which truncation).  Total dimensions stay below
~100 for every configuration this package targets, so dense storage is used
throughout.

Factor order is canonical and enforced: internal qubit first, then the
atomic external (well) state, then the two photon modes.  All builders in
:mod:`ringqed.model` rely on this order; constructing a layout in any other
order raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, LayoutError

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8

#: Recognized factor labels, in canonical precedence order.
FACTOR_PRECEDENCE = {
    "internal": 0,
    "external": 1,
    "modeCW": 2,
    "modeCCW": 3,
    "modeS": 2,
    "modeA": 3,
}


def _as_matrix(op) -> np.ndarray:
    """Accept an Operator, DensityMatrix or bare array and return the array."""
    if isinstance(op, DensityMatrix):
        return op.op.matrix
    if isinstance(op, Operator):
        return op.matrix
    return np.asarray(op, dtype=complex)


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered tensor-factor description of a Hilbert space.

    ``factors`` is a tuple of ``(label, dim)`` pairs in canonical order.
    """

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        labels = [f[0] for f in self.factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate factor labels in {labels}")
        for label, dim in self.factors:
            if label not in FACTOR_PRECEDENCE:
                raise LayoutError(f"unknown factor label {label!r}")
            if dim < 1:
                raise LayoutError(f"factor {label!r} has dimension {dim}")
        order = [FACTOR_PRECEDENCE[lab] for lab in labels]
        if order != sorted(order):
            raise LayoutError(f"factors not in canonical order: {labels}")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f[0] for f in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f[1] for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"layout has no factor {label!r}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.axis(label)]

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def subset(self, keep: Sequence[str]) -> "SpaceLayout":
        """Layout restricted to ``keep`` (canonical order preserved)."""
        kept = tuple(f for f in self.factors if f[0] in set(keep))
        return SpaceLayout(kept)


@dataclass(frozen=True)
class Operator:
    """A dense matrix tagged with the Hilbert-space layout it acts on."""

    layout: SpaceLayout
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator matrix must be square, got {m.shape}")
        if m.shape[0] != self.layout.dim:
            raise DimensionError(
                f"matrix dim {m.shape[0]} does not match layout dim {self.layout.dim}"
            )
        if not np.all(np.isfinite(m)):
            raise DimensionError("operator entries must be finite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.layout, self.matrix.conj().T)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)


class DensityMatrix:
    """Hermitian, unit-trace system state on a :class:`SpaceLayout`.

    Hermiticity is enforced on construction via ``rho <- (rho + rho†)/2``;
    the trace must already be within ``TRACE_TOL`` of one.  Positivity is a
    diagnostic check (:meth:`min_eigenvalue`), run at checkpoints rather
    than on every construction for cost reasons.
    """

    __slots__ = ("op",)

    def __init__(self, op: Operator):
        m = 0.5 * (op.matrix + op.matrix.conj().T)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise DimensionError(f"density matrix trace {tr} deviates from 1")
        self.op = Operator(op.layout, m)

    @classmethod
    def from_matrix(cls, layout: SpaceLayout, matrix: np.ndarray, *, normalize: bool = False):
        m = np.asarray(matrix, dtype=complex)
        if normalize:
            tr = np.trace(m).real
            if abs(tr) < 1e-300:
                raise DimensionError("cannot normalize a traceless matrix")
            m = m / tr
        return cls(Operator(layout, m))

    @classmethod
    def from_pure(cls, layout: SpaceLayout, vec: np.ndarray):
        v = np.asarray(vec, dtype=complex).reshape(-1)
        if v.size != layout.dim:
            raise DimensionError(f"state vector length {v.size} != layout dim {layout.dim}")
        v = v / np.linalg.norm(v)
        return cls(Operator(layout, np.outer(v, v.conj())))

    @property
    def layout(self) -> SpaceLayout:
        return self.op.layout

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    @property
    def dim(self) -> int:
        return self.op.dim

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def check_positive(self, tol: float = POSITIVITY_TOL) -> float:
        emin = self.min_eigenvalue()
        if emin < tol:
            raise DimensionError(f"density matrix not positive: min eigenvalue {emin}")
        return emin


def kron(a, b) -> np.ndarray:
    """Kronecker product of two square operators (Operator or array)."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    for m in (ma, mb):
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"kron operands must be square, got {m.shape}")
    return np.kron(ma, mb)


def kron_all(*ops) -> np.ndarray:
    out = np.array([[1.0 + 0.0j]])
    for op in ops:
        out = kron(out, op)
    return out


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def annihilation(n_max: int) -> np.ndarray:
    """Bosonic annihilation operator on a Fock space truncated at ``n_max``.

    Returns an ``(n_max+1) x (n_max+1)`` matrix with sqrt(n) on the first
    superdiagonal.  ``n_max = 0`` leaves no photon dynamics and is rejected.
    """
    if n_max < 1:
        raise DimensionError("annihilation requires n_max >= 1")
    return np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), 1).astype(complex)


def number_operator(n_max: int) -> np.ndarray:
    return np.diag(np.arange(n_max + 1, dtype=float)).astype(complex)


@dataclass(frozen=True)
class PauliSet:
    """sigma+, sigma-, sigma^x, sigma^z on a two-level factor.

    Basis order is (ground, excited): sigma+ = |excited><ground| and
    [sigma^z, sigma+] = 2 sigma+.
    """

    sp: np.ndarray
    sm: np.ndarray
    sx: np.ndarray
    sz: np.ndarray
    labels: tuple[str, str]


def pauli_set(labels: tuple[str, str] = ("g", "e")) -> PauliSet:
    if len(labels) != 2:
        raise DimensionError("pauli_set acts on dim-2 factors only")
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    sm = sp.conj().T
    sx = sp + sm
    sz = np.diag([-1.0, 1.0]).astype(complex)
    return PauliSet(sp=sp, sm=sm, sx=sx, sz=sz, labels=tuple(labels))


def embed(layout: SpaceLayout, ops: Mapping[str, np.ndarray]) -> np.ndarray:
    """Lift factor-local operators into the full space.

    ``ops`` maps factor labels to local matrices; unlisted factors get the
    identity.  The result is the Kronecker product in layout order.
    """
    mats = []
    for label, dim in layout.factors:
        if label in ops:
            m = _as_matrix(ops[label])
            if m.shape != (dim, dim):
                raise DimensionError(
                    f"operator for {label!r} has shape {m.shape}, expected {(dim, dim)}"
                )
            mats.append(m)
        else:
            mats.append(identity(dim))
    unknown = set(ops) - set(layout.labels)
    if unknown:
        raise LayoutError(f"layout has no factors {sorted(unknown)}")
    return kron_all(*mats)


def basis_state(layout: SpaceLayout, occupation: Mapping[str, int]) -> np.ndarray:
    """Product basis vector |i1, i2, ...> given per-factor indices."""
    unknown = set(occupation) - set(layout.labels)
    if unknown:
        raise LayoutError(f"layout has no factors {sorted(unknown)}")
    vecs = []
    for label, dim in layout.factors:
        idx = int(occupation.get(label, 0))
        if not 0 <= idx < dim:
            raise DimensionError(f"index {idx} out of range for factor {label!r} (dim {dim})")
        v = np.zeros(dim, dtype=complex)
        v[idx] = 1.0
        vecs.append(v)
    out = np.array([1.0 + 0.0j])
    for v in vecs:
        out = np.kron(out, v)
    return out


def expectation(obs, rho: DensityMatrix) -> complex:
    """Tr(obs . rho).  Imaginary part is ~1e-10 or below for Hermitian obs."""
    if isinstance(obs, Operator):
        if obs.layout != rho.layout:
            raise LayoutError("observable and state layouts differ")
        m = obs.matrix
    else:
        m = _as_matrix(obs)
        if m.shape != rho.matrix.shape:
            raise LayoutError("observable dimension does not match state")
    return complex(np.einsum("ij,ji->", m, rho.matrix))


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Reduced state on the ``keep`` factors (canonical order preserved)."""
    keep = list(keep)
    if not keep:
        raise LayoutError("partial_trace requires at least one kept factor")
    layout = rho.layout
    for label in keep:
        if label not in layout:
            raise LayoutError(f"layout has no factor {label!r}")
    keep_set = set(keep)
    dims = layout.dims
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    # trace out dropped axes from the back so axis numbers stay valid
    for ax in reversed(range(n)):
        if layout.labels[ax] not in keep_set:
            t = np.trace(t, axis1=ax, axis2=ax + (t.ndim // 2))
    sub = layout.subset(keep)
    d = sub.dim
    return DensityMatrix.from_matrix(sub, t.reshape(d, d))
