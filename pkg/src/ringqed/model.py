"""Builders for every Hamiltonian, collapse operator and basis transform.

Units and conventions
---------------------
All rates are in units of the cavity linewidth ``kappa`` (set ``kappa=1``).
Three model tiers are supported:

* ``FULL_LAB``: driven two-level atom in a double well coupled to the two
  counterpropagating ring-cavity modes.  Factors
  ``internal (g,e) x external (L,R) x modeCW x modeCCW``.
* ``EFFECTIVE_SA``: dispersive model after eliminating the excited internal
  state, written in the symmetric/antisymmetric mode basis and the extended
  well basis.  Factors ``external (+,-) x modeS x modeA``.
* ``EXTERNAL_ONLY``: two-level master equation for the well degree of
  freedom alone, with light-induced shifts and transfer rates.

Basis orders: internal ``(g, e)``; external ``(L, R)`` in the lab model and
``(+, -)`` in the reduced models, with ``|+-> = (|L> +- |R>)/sqrt(2)``.
The atom-photon phases are ``phi_L = -phi/2`` and ``phi_R = +phi/2``, so the
emission matrix element ``<g,L,1_CW,0|H|e,L,0,0>`` equals ``g e^{+i phi/2}``.
The external raising operator configured here is ``sigma+_ext = |-><+|``: for
``J > 0`` the tunneling Hamiltonian ``-J sigma^z_ext`` makes ``|->`` the
upper level, and photon loss from the antisymmetric mode transfers
``|+> -> |->`` population at rate ``Gamma_+``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .algebra import (
    Operator,
    SpaceLayout,
    annihilation,
    basis_state,
    embed,
    number_operator,
    pauli_set,
)
from .errors import DimensionError, LayoutError, SingularRateError

HERMITICITY_ASSERT_TOL = 1e-12

_PAULI = pauli_set(("g", "e"))

# external-state operators in the (+, -) basis
EXT_SZ = np.diag([1.0, -1.0]).astype(complex)          # |+><+| - |-><-|
EXT_SX = np.array([[0, 1], [1, 0]], dtype=complex)     # |+><-| + |-><+|
EXT_SP = np.array([[0, 0], [1, 0]], dtype=complex)     # |-><+|
EXT_SM = EXT_SP.conj().T                               # |+><-|
PROJ_PLUS = np.diag([1.0, 0.0]).astype(complex)
PROJ_MINUS = np.diag([0.0, 1.0]).astype(complex)

# lab-frame external operators in the (L, R) basis
PROJ_L = np.diag([1.0, 0.0]).astype(complex)
PROJ_R = np.diag([0.0, 1.0]).astype(complex)
TUNNEL = np.array([[0, 1], [1, 0]], dtype=complex)     # |L><R| + |R><L|


class ModelKind(enum.Enum):
    """The three model tiers."""

    FULL_LAB = "full-lab"
    EFFECTIVE_SA = "effective-sa"
    EXTERNAL_ONLY = "external-only"


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and angles, all in units of ``kappa``.

    ``delta`` is the drive-cavity detuning, ``Delta`` the drive-atom
    detuning, ``J`` the tunneling amplitude and ``phi = 2 pi d / lambda``
    the spatial phase set by the double-well spacing.
    """

    kappa: float = 1.0
    gamma: float = 10.0
    Delta: float = 200.0
    g: float = 0.5
    Omega: float = 20.0
    delta: float = 0.0
    J: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        vals = [self.kappa, self.gamma, self.Delta, self.g, self.Omega,
                self.delta, self.J, self.phi]
        if not all(np.isfinite(v) for v in vals):
            raise DimensionError("all system parameters must be finite")
        if self.kappa <= 0:
            raise DimensionError("kappa must be positive")
        if not self.dispersive:
            warnings.warn(
                "parameters violate the dispersive condition "
                "|Delta| >= 10 max(g, Omega, gamma, kappa); "
                "effective-model results are unreliable",
                stacklevel=2,
            )

    @property
    def dispersive(self) -> bool:
        return abs(self.Delta) >= 10.0 * max(self.g, self.Omega, self.gamma, self.kappa)

    @property
    def omega_eff(self) -> float:
        """Effective drive amplitude sqrt(2) g Omega / Delta."""
        return np.sqrt(2.0) * self.g * self.Omega / self.Delta

    def replace(self, **kwargs) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **kwargs)


def build_space(kind: ModelKind, n_max: int = 2) -> SpaceLayout:
    """Canonical layout for a model tier with photon truncation ``n_max``."""
    if kind is ModelKind.FULL_LAB:
        if n_max < 1:
            raise DimensionError("photon-bearing models need n_max >= 1")
        return SpaceLayout((
            ("internal", 2), ("external", 2),
            ("modeCW", n_max + 1), ("modeCCW", n_max + 1),
        ))
    if kind is ModelKind.EFFECTIVE_SA:
        if n_max < 1:
            raise DimensionError("photon-bearing models need n_max >= 1")
        return SpaceLayout((
            ("external", 2), ("modeS", n_max + 1), ("modeA", n_max + 1),
        ))
    if kind is ModelKind.EXTERNAL_ONLY:
        return SpaceLayout((("external", 2),))
    raise LayoutError(f"unknown model kind {kind}")


def _photon_labels(layout: SpaceLayout) -> tuple[str, str]:
    if "modeCW" in layout and "modeCCW" in layout:
        return "modeCW", "modeCCW"
    if "modeS" in layout and "modeA" in layout:
        return "modeS", "modeA"
    raise LayoutError("layout carries no photon mode pair")


def _assert_hermitian(m: np.ndarray, what: str):
    dev = np.max(np.abs(m - m.conj().T))
    if dev > HERMITICITY_ASSERT_TOL:
        raise AssertionError(f"{what} is not Hermitian (max deviation {dev:.2e})")


def full_hamiltonian(p: SystemParams, space: SpaceLayout) -> Operator:
    """Lab-frame Hamiltonian of the driven atom coupled to both ring modes.

    Implements the five terms: cavity detuning, atomic detuning, coherent
    drive, position-phased atom-photon coupling and tunneling.
    """
    if "modeCW" not in space or "internal" not in space:
        raise LayoutError("full_hamiltonian requires the full-lab layout")
    n_max = space.dim_of("modeCW") - 1
    a = annihilation(n_max)
    num = number_operator(n_max)
    h = -p.delta * (embed(space, {"modeCW": num}) + embed(space, {"modeCCW": num}))
    h = h - p.Delta * embed(space, {"internal": _PAULI.sp @ _PAULI.sm})
    h = h + 0.5 * p.Omega * embed(space, {"internal": _PAULI.sx})
    h = h - p.J * embed(space, {"external": TUNNEL})
    for proj, phase in ((PROJ_L, -p.phi / 2.0), (PROJ_R, +p.phi / 2.0)):
        absorb = p.g * (
            np.exp(1j * phase) * embed(space, {"internal": _PAULI.sp, "external": proj, "modeCW": a})
            + np.exp(-1j * phase) * embed(space, {"internal": _PAULI.sp, "external": proj, "modeCCW": a})
        )
        h = h + absorb + absorb.conj().T
    _assert_hermitian(h, "full Hamiltonian")
    return Operator(space, h)


def collapse_operators(p: SystemParams, space: SpaceLayout) -> list[tuple[Operator, float]]:
    """Collapse channels for a layout: lab model gets (sigma-, gamma) and the
    two traveling modes at kappa; the effective model gets the S/A modes at
    kappa (atomic decay is eliminated along with the excited state)."""
    if "internal" in space:
        n_max = space.dim_of("modeCW") - 1
        a = annihilation(n_max)
        return [
            (Operator(space, embed(space, {"internal": _PAULI.sm})), p.gamma),
            (Operator(space, embed(space, {"modeCW": a})), p.kappa),
            (Operator(space, embed(space, {"modeCCW": a})), p.kappa),
        ]
    if "modeS" in space:
        n_max = space.dim_of("modeS") - 1
        a = annihilation(n_max)
        return [
            (Operator(space, embed(space, {"modeS": a})), p.kappa),
            (Operator(space, embed(space, {"modeA": a})), p.kappa),
        ]
    # external-only: jumps come from external_generator
    ham, jumps = external_generator(p)
    return [(op, rate) for op, rate in jumps]


def effective_hamiltonian(p: SystemParams, space: SpaceLayout) -> Operator:
    """Dispersive Hamiltonian H_S + H_A - J sigma^z_ext on the S/A layout.

    The symmetric mode is driven with amplitude (Omega_eff/2) cos(phi/2);
    the antisymmetric mode couples through sigma^x_ext with amplitude
    (Omega_eff/2) sin(phi/2).
    """
    if "modeS" not in space:
        raise LayoutError("effective_hamiltonian requires the S/A layout")
    n_max = space.dim_of("modeS") - 1
    a = annihilation(n_max)
    num = number_operator(n_max)
    drive = 0.5 * p.omega_eff
    h = -p.delta * (embed(space, {"modeS": num}) + embed(space, {"modeA": num}))
    h = h + drive * np.cos(p.phi / 2.0) * embed(space, {"modeS": a + a.conj().T})
    h = h + drive * np.sin(p.phi / 2.0) * embed(space, {"modeA": a + a.conj().T, "external": EXT_SX})
    h = h - p.J * embed(space, {"external": EXT_SZ})
    _assert_hermitian(h, "effective Hamiltonian")
    return Operator(space, h)


def parity_operator(space: SpaceLayout) -> Operator:
    """exp(i pi n_A) sigma^z_ext; commutes with the effective Hamiltonian."""
    if "modeA" not in space:
        raise LayoutError("parity_operator requires the S/A layout")
    n_max = space.dim_of("modeA") - 1
    signs = np.diag((-1.0 + 0j) ** np.arange(n_max + 1))
    return Operator(space, embed(space, {"modeA": signs, "external": EXT_SZ}))


def basis_transform(which: str, space: SpaceLayout) -> Operator:
    """Change-of-basis unitary on the full-lab layout.

    ``which='photon'`` maps CW/CCW coordinates to S/A coordinates, i.e.
    conjugating with the returned U sends a_S = (a_CW + a_CCW)/sqrt(2) and
    a_A = -i (a_CW - a_CCW)/sqrt(2) onto the canonical mode operators of the
    first and second photon factor.  ``which='external'`` maps (L, R)
    coordinates to (+, -) coordinates.
    """
    if "modeCW" not in space:
        raise LayoutError("basis_transform acts on the full-lab layout")
    if which == "external":
        had = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
        return Operator(space, embed(space, {"external": had}))
    if which != "photon":
        raise LayoutError(f"unknown transform {which!r}")
    # single-particle mixing matrix (a_S, a_A)^T = M (a_CW, a_CCW)^T
    m = np.array([[1.0, 1.0], [-1.0j, 1.0j]], dtype=complex) / np.sqrt(2.0)
    # lift to Fock space: U† a_i U = sum_j M_ij a_j with U = exp(-i a† h a),
    # h = i log(M)
    hsmall = 1j * _logm_unitary(m)
    n_max = space.dim_of("modeCW") - 1
    a = annihilation(n_max)
    ops = {
        ("modeCW", "modeCW"): embed(space, {"modeCW": a.conj().T @ a}),
        ("modeCW", "modeCCW"): embed(space, {"modeCW": a.conj().T, "modeCCW": a}),
        ("modeCCW", "modeCW"): embed(space, {"modeCCW": a.conj().T, "modeCW": a}),
        ("modeCCW", "modeCCW"): embed(space, {"modeCCW": a.conj().T @ a}),
    }
    gen = np.zeros((space.dim, space.dim), dtype=complex)
    for i, li in enumerate(("modeCW", "modeCCW")):
        for j, lj in enumerate(("modeCW", "modeCCW")):
            gen += hsmall[i, j] * ops[(li, lj)]
    _assert_hermitian(gen, "photon transform generator")
    from scipy.linalg import expm

    return Operator(space, expm(-1j * gen))


def _logm_unitary(m: np.ndarray) -> np.ndarray:
    """Principal logarithm of a unitary via its eigendecomposition."""
    w, v = np.linalg.eig(m)
    return v @ np.diag(np.log(w)) @ np.linalg.inv(v)


def external_generator(p: SystemParams) -> tuple[Operator, list[tuple[Operator, float]]]:
    """Reduced generator for the well degree of freedom.

    Hamiltonian ``-J sigma^z + J_+ |+><+| + J_- |-><-|`` (equivalently
    ``-J' sigma^z`` up to a constant) plus transfer channels
    ``(sigma+_ext, Gamma_+)`` and ``(sigma-_ext, Gamma_-)`` with the
    light-induced shifts and rates J_pm, Gamma_pm.
    """
    from .oracles import rates

    rs = rates(p)
    if p.kappa == 0 and min(abs(p.delta - 2 * p.J), abs(p.delta + 2 * p.J)) < 1e-12:
        raise SingularRateError("transfer rates diverge: kappa = 0 on resonance")
    space = build_space(ModelKind.EXTERNAL_ONLY)
    h = (-p.J * EXT_SZ + rs.J_plus * PROJ_PLUS + rs.J_minus * PROJ_MINUS).astype(complex)
    ham = Operator(space, h)
    jumps = [
        (Operator(space, EXT_SP.copy()), rs.Gamma_plus),
        (Operator(space, EXT_SM.copy()), rs.Gamma_minus),
    ]
    return ham, jumps


def initial_state(space: SpaceLayout, external: str = "L", photons: int = 0):
    """Product state builder: ground internal state, given well state, Fock
    photons.  ``external`` is one of L, R, +, - (well superpositions are
    expanded in whichever basis the layout uses)."""
    from .algebra import DensityMatrix

    ph1, ph2 = (None, None)
    try:
        ph1, ph2 = _photon_labels(space)
    except LayoutError:
        pass
    occ = {}
    if "internal" in space:
        occ["internal"] = 0
    for ph in (ph1, ph2):
        if ph is not None:
            occ[ph] = photons
    lab_basis = "modeCW" in space or "internal" in space
    ext_vecs_lab = {"L": [1, 0], "R": [0, 1],
                    "+": [1 / np.sqrt(2), 1 / np.sqrt(2)],
                    "-": [1 / np.sqrt(2), -1 / np.sqrt(2)]}
    ext_vecs_pm = {"+": [1, 0], "-": [0, 1],
                   "L": [1 / np.sqrt(2), 1 / np.sqrt(2)],
                   "R": [1 / np.sqrt(2), -1 / np.sqrt(2)]}
    table = ext_vecs_lab if lab_basis else ext_vecs_pm
    if external not in table:
        raise LayoutError(f"unknown external state {external!r}")
    if "external" not in space:
        raise LayoutError("layout has no external factor")
    vec = np.zeros(space.dim, dtype=complex)
    coeffs = table[external]
    for idx, c in enumerate(coeffs):
        if c == 0:
            continue
        occ2 = dict(occ)
        occ2["external"] = idx
        vec += c * basis_state(space, occ2)
    return DensityMatrix.from_pure(space, vec)
