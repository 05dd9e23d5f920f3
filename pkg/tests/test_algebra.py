import numpy as np
import pytest

from ringqed.algebra import (
    DensityMatrix,
    Operator,
    SpaceLayout,
    annihilation,
    basis_state,
    embed,
    expectation,
    kron,
    kron_all,
    partial_trace,
    pauli_set,
)
from ringqed.errors import DimensionError, LayoutError

I2 = np.eye(2, dtype=complex)


def test_kron_identity():
    assert np.array_equal(kron(I2, I2), np.eye(4, dtype=complex))


def test_kron_diag_hand_expansion():
    out = kron(np.diag([1.0, 2.0]), np.diag([3.0, 4.0]))
    assert np.array_equal(out, np.diag([3.0, 4.0, 6.0, 8.0]).astype(complex))


def test_kron_associativity_integer_matrices():
    rng = np.random.default_rng(7)
    a, b, c = (rng.integers(-3, 4, size=(2, 2)).astype(complex) for _ in range(3))
    assert np.array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_kron_staged_vs_direct_four_factor():
    sp = pauli_set().sp
    staged = kron(kron(sp, I2), kron(I2, I2))
    direct = kron_all(sp, I2, I2, I2)
    assert np.array_equal(staged, direct)


def test_kron_rejects_non_square():
    with pytest.raises(DimensionError):
        kron(np.ones((2, 3)), I2)


def test_annihilation_single_excitation():
    assert np.array_equal(annihilation(1), np.array([[0, 1], [0, 0]], dtype=complex))


def test_annihilation_bosonic_normalization():
    assert annihilation(2)[1, 2] == pytest.approx(np.sqrt(2))


def test_number_operator_from_product():
    a = annihilation(3)
    assert np.allclose(a.conj().T @ a, np.diag([0.0, 1.0, 2.0, 3.0]))


def test_annihilation_rejects_zero_truncation():
    with pytest.raises(DimensionError):
        annihilation(0)


def test_truncated_commutator_defect_is_confined_to_top_level():
    for n_max in (2, 3, 5):
        a = annihilation(n_max)
        comm = a @ a.conj().T - a.conj().T @ a
        expect = np.eye(n_max + 1, dtype=complex)
        expect[n_max, n_max] = -n_max
        assert np.allclose(comm, expect, atol=1e-14)


def test_pauli_completeness_and_ladder():
    p = pauli_set()
    assert np.allclose(p.sp @ p.sm + p.sm @ p.sp, I2)
    assert np.array_equal(p.sx, p.sp + p.sm)
    assert np.allclose(p.sz @ p.sp - p.sp @ p.sz, 2 * p.sp)


def _two_qubit_layout():
    return SpaceLayout((("internal", 2), ("external", 2)))


def test_expectation_trace_normalization():
    lay = _two_qubit_layout()
    rho = DensityMatrix.from_matrix(lay, np.eye(4) / 4)
    assert expectation(Operator(lay, np.eye(4, dtype=complex)), rho) == pytest.approx(1.0)


def test_expectation_fock_states():
    lay = SpaceLayout((("modeCW", 3),))
    a = annihilation(2)
    nop = Operator(lay, a.conj().T @ a)
    vac = DensityMatrix.from_pure(lay, np.array([1, 0, 0]))
    one = DensityMatrix.from_pure(lay, np.array([0, 1, 0]))
    assert expectation(nop, vac) == pytest.approx(0.0)
    assert expectation(nop, one) == pytest.approx(1.0)


def test_expectation_layout_mismatch():
    lay = _two_qubit_layout()
    other = SpaceLayout((("modeCW", 4),))
    rho = DensityMatrix.from_matrix(lay, np.eye(4) / 4)
    with pytest.raises(LayoutError):
        expectation(Operator(other, np.eye(4, dtype=complex)), rho)


def test_partial_trace_product_state():
    lay = _two_qubit_layout()
    rho_a = np.array([[0.75, 0.1j], [-0.1j, 0.25]], dtype=complex)
    rho_b = np.array([[0.5, 0.2], [0.2, 0.5]], dtype=complex)
    rho = DensityMatrix.from_matrix(lay, np.kron(rho_a, rho_b))
    red = partial_trace(rho, ["internal"])
    assert np.allclose(red.matrix, rho_a, atol=1e-14)
    assert np.trace(red.matrix).real == pytest.approx(1.0, abs=1e-12)


def test_partial_trace_bell_state_is_maximally_mixed():
    lay = _two_qubit_layout()
    bell = (basis_state(lay, {"internal": 0, "external": 0})
            + basis_state(lay, {"internal": 1, "external": 1})) / np.sqrt(2)
    rho = DensityMatrix.from_pure(lay, bell)
    red = partial_trace(rho, ["external"])
    assert np.allclose(red.matrix, I2 / 2, atol=1e-14)


def test_partial_trace_keep_all_is_identity():
    lay = _two_qubit_layout()
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = m @ m.conj().T
    rho = DensityMatrix.from_matrix(lay, m / np.trace(m).real)
    red = partial_trace(rho, ["internal", "external"])
    assert np.allclose(red.matrix, rho.matrix, atol=1e-14)


def test_partial_trace_unknown_label():
    lay = _two_qubit_layout()
    rho = DensityMatrix.from_matrix(lay, np.eye(4) / 4)
    with pytest.raises(LayoutError):
        partial_trace(rho, ["modeS"])


def test_layout_enforces_canonical_order_and_unique_labels():
    with pytest.raises(LayoutError):
        SpaceLayout((("external", 2), ("internal", 2)))
    with pytest.raises(LayoutError):
        SpaceLayout((("internal", 2), ("internal", 2)))
    with pytest.raises(LayoutError):
        SpaceLayout((("bogus", 2),))


def test_density_matrix_enforces_trace_and_hermiticity():
    lay = SpaceLayout((("internal", 2),))
    with pytest.raises(DimensionError):
        DensityMatrix.from_matrix(lay, np.diag([0.9, 0.3]))
    skewed = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
    rho = DensityMatrix.from_matrix(lay, skewed)
    assert np.allclose(rho.matrix, rho.matrix.conj().T)


def test_embed_places_identity_on_unlisted_factors():
    lay = SpaceLayout((("internal", 2), ("modeCW", 3)))
    sp = pauli_set().sp
    lifted = embed(lay, {"internal": sp})
    assert np.array_equal(lifted, np.kron(sp, np.eye(3, dtype=complex)))
    with pytest.raises(LayoutError):
        embed(lay, {"modeA": sp})
