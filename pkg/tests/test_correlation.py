import numpy as np
import pytest

from ringqed.algebra import Operator, SpaceLayout, annihilation, embed
from ringqed.correlation import G2Series, g2_numeric, g2_zero
from ringqed.engine import SteadySpec, steady_state
from ringqed.errors import DimensionError, UnmeasurableModeError
from ringqed.model import (
    ModelKind,
    SystemParams,
    build_space,
    collapse_operators,
    effective_hamiltonian,
    full_hamiltonian,
)
from ringqed import oracles


def _effective_steady(p, n_max=2):
    space = build_space(ModelKind.EFFECTIVE_SA, n_max)
    h = effective_hamiltonian(p, space)
    jumps = collapse_operators(p, space)
    rho = steady_state(h, jumps, SteadySpec(method="nullspace"))
    return space, h, jumps, rho


def test_coherent_light_is_uncorrelated():
    # driven empty two-mode cavity: g2 = 1 for all delays (truncation deep
    # enough that the clipped Poisson tail sits below the tolerance)
    lay = SpaceLayout((("modeCW", 9), ("modeCCW", 2)))
    a7 = annihilation(8)
    h = Operator(lay, embed(lay, {"modeCW": -0.4 * (a7.conj().T @ a7)
                                  + 0.25 * (a7 + a7.conj().T)}))
    jumps = [(Operator(lay, embed(lay, {"modeCW": a7})), 1.0),
             (Operator(lay, embed(lay, {"modeCCW": annihilation(1)})), 1.0)]
    rho = steady_state(h, jumps, SteadySpec(method="nullspace"))
    taus = np.linspace(0, 6, 61)
    series = g2_numeric(h, jumps, rho, "CW", taus, rtol=1e-10)
    assert np.max(np.abs(series.values - 1.0)) < 1e-6


def test_unoccupied_mode_is_unmeasurable():
    lay = SpaceLayout((("modeCW", 3), ("modeCCW", 3)))
    a = annihilation(2)
    h = Operator(lay, np.zeros((9, 9), dtype=complex))
    jumps = [(Operator(lay, embed(lay, {"modeCW": a})), 1.0),
             (Operator(lay, embed(lay, {"modeCCW": a})), 1.0)]
    from ringqed.algebra import DensityMatrix

    vac = np.zeros((9, 9), dtype=complex)
    vac[0, 0] = 1.0
    rho = DensityMatrix.from_matrix(lay, vac)
    with pytest.raises(UnmeasurableModeError):
        g2_numeric(h, jumps, rho, "CW", np.array([0.0, 1.0]))


def test_tau_grid_must_start_at_zero():
    with pytest.raises(DimensionError):
        G2Series(tau_grid=np.array([1.0, 2.0]), values=np.array([1.0, 1.0]),
                 mode="CW")


def test_effective_model_bunching_peak():
    # phi = pi, J = 2: g2(0) tracks 1 + 16 J^2/kappa^2 = 65 within 10%
    p = SystemParams(J=2.0, phi=np.pi, delta=0.0)
    space, h, jumps, rho = _effective_steady(p, n_max=3)
    val = g2_zero(h, jumps, rho, "CW")
    assert val == pytest.approx(65.0, rel=0.10)


def test_mode_symmetry_of_g2():
    p = SystemParams(J=1.5, phi=2.2, delta=0.0)
    space, h, jumps, rho = _effective_steady(p, n_max=2)
    taus = np.linspace(0, 5, 51)
    cw = g2_numeric(h, jumps, rho, "CW", taus)
    ccw = g2_numeric(h, jumps, rho, "CCW", taus)
    assert np.max(np.abs(cw.values - ccw.values)) < 1e-8


def test_g2_matches_closed_form_along_delay_axis():
    # pointwise agreement with the closed form, relative to max(1, value)
    p = SystemParams(J=2.0, phi=3 * np.pi / 4, delta=0.0)
    space, h, jumps, rho = _effective_steady(p, n_max=3)
    taus = np.linspace(0, 10, 201)
    series = g2_numeric(h, jumps, rho, "CW", taus)
    closed = oracles.g2_closed(p, taus)
    dev = np.abs(series.values - closed) / np.maximum(1.0, np.abs(closed))
    assert np.max(dev) < 0.10


def test_long_delay_factorization_numeric():
    p = SystemParams(J=1.0, phi=2.0, delta=0.0)
    space, h, jumps, rho = _effective_steady(p, n_max=2)
    taus = np.array([0.0, 20.0])
    series = g2_numeric(h, jumps, rho, "CW", taus)
    assert abs(series.values[-1] - 1.0) <= 0.02


def test_oscillation_frequency_tracks_tunneling():
    # peak spacing of g2(tau) at phi = pi equals pi/J within grid resolution
    p = SystemParams(J=2.0, phi=np.pi, delta=0.0)
    space, h, jumps, rho = _effective_steady(p, n_max=3)
    taus = np.linspace(0, 8, 1601)
    series = g2_numeric(h, jumps, rho, "CW", taus)
    v = series.values
    peaks = [k for k in range(1, len(taus) - 1)
             if v[k] >= v[k - 1] and v[k] >= v[k + 1] and v[k] > 1.05]
    spacings = np.diff(taus[peaks])
    assert len(spacings) >= 3
    assert np.mean(spacings) == pytest.approx(np.pi / p.J, rel=0.02)


def test_full_model_g2_zero_agrees_with_effective():
    p = SystemParams(J=2.0, phi=np.pi, delta=0.0)
    space = build_space(ModelKind.FULL_LAB, 3)
    h = full_hamiltonian(p, space)
    jumps = collapse_operators(p, space)
    rho = steady_state(h, jumps, SteadySpec(method="nullspace"))
    full_val = g2_zero(h, jumps, rho, "CW")
    _, he, je, rhoe = _effective_steady(p, n_max=3)
    eff_val = g2_zero(he, je, rhoe, "CW")
    assert full_val == pytest.approx(eff_val, rel=0.05)
