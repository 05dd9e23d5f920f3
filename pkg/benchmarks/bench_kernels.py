"""Benchmark: compiled integrator core vs pure-numpy fallback.

Times the Dormand-Prince Lindblad stepper on the three model sizes the
package actually runs (effective model, full lab model at the default and
the correlation truncation) and reports the speedup plus the worst
elementwise deviation between the two backends.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from ringqed._kernels import available_backends
from ringqed.model import (
    ModelKind,
    SystemParams,
    build_space,
    collapse_operators,
    effective_hamiltonian,
    full_hamiltonian,
    initial_state,
)

CASES = [
    ("effective model, dim 18", ModelKind.EFFECTIVE_SA, 2, 20.0),
    ("full lab model, dim 36", ModelKind.FULL_LAB, 2, 10.0),
    ("full lab model, dim 64", ModelKind.FULL_LAB, 3, 5.0),
]


def problem(kind, n_max):
    p = SystemParams(J=2.0, phi=1.1, delta=-1.0)
    space = build_space(kind, n_max)
    if kind is ModelKind.FULL_LAB:
        h = full_hamiltonian(p, space)
    else:
        h = effective_hamiltonian(p, space)
    jumps = collapse_operators(p, space)
    ls = np.array([op.matrix for op, _ in jumps])
    rates = np.array([r for _, r in jumps])
    h_nh = -1j * h.matrix - 0.5 * sum(
        r * (lm.conj().T @ lm) for lm, r in zip(ls, rates))
    rho0 = initial_state(space, external="L").matrix
    return h_nh, ls, rates, rho0


def main():
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    header = f"{'case':<28} " + " ".join(f"{name:>12}" for name in backends) \
        + f" {'speedup':>9} {'max |diff|':>12} {'steps':>7}"
    print(header)
    print("-" * len(header))
    for label, kind, n_max, t_end in CASES:
        h_nh, ls, rates, rho0 = problem(kind, n_max)
        tg = np.array([0.0, t_end])
        results = {}
        times = {}
        steps = {}
        for name, impl in backends.items():
            impl.rk45_lindblad(h_nh, ls, rates, rho0, tg)  # warm up
            t0 = time.perf_counter()
            out, info = impl.rk45_lindblad(h_nh, ls, rates, rho0, tg)
            times[name] = time.perf_counter() - t0
            results[name] = out
            steps[name] = info["nsteps"]
        row = f"{label:<28} " + " ".join(f"{times[n] * 1e3:>10.1f}ms" for n in backends)
        if len(backends) > 1:
            names = list(backends)
            speedup = times[names[0]] / times[names[-1]]
            dev = np.max(np.abs(results[names[0]] - results[names[-1]]))
            row += f" {speedup:>8.2f}x {dev:>12.2e}"
        else:
            row += f" {'n/a':>9} {'n/a':>12}"
        row += f" {steps[list(backends)[0]]:>7}"
        print(row)


if __name__ == "__main__":
    main()
