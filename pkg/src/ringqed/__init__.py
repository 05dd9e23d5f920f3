"""Single-atom double-well ring-cavity simulator and analytic oracles.

Numeric side: dense master-equation integration (compiled kernel with a
pure-numpy fallback), direct steady-state solves and slow-mode expansions.
Analytic side: every closed-form dispersive-regime result as pure
functions.  The experiment presets put the two side by side.
"""

__version__ = "0.1.0"

from .algebra import (
    DensityMatrix,
    Operator,
    SpaceLayout,
    annihilation,
    basis_state,
    embed,
    expectation,
    kron,
    partial_trace,
    pauli_set,
)
from .model import (
    ModelKind,
    SystemParams,
    basis_transform,
    build_space,
    collapse_operators,
    effective_hamiltonian,
    external_generator,
    full_hamiltonian,
    initial_state,
    parity_operator,
)
from .engine import (
    EvolutionSpec,
    SteadySpec,
    Trajectory,
    evolve,
    lindblad_rhs,
    liouvillian,
    slow_modes,
    spectral_tail,
    steady_state,
)
from .observables import ObservableRecord, directionality, external_state, photon_numbers, record
from .correlation import G2Series, g2_numeric, g2_zero
from . import oracles
from .experiments import (
    ExperimentConfig,
    fit_oscillation,
    fit_relaxation,
    run,
)
from ._kernels import KERNEL_BACKEND

__all__ = [name for name in dir() if not name.startswith("_")]
