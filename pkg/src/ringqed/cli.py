"""Command-line interface.

Subcommands: ``steady``, ``dynamics``, ``g2``, ``sweep`` and
``preset <name>``.  All rates are in units of the cavity linewidth.  A flat
JSON config file (keys = ExperimentConfig fields) can seed any run; command
line flags override file values.

Exit codes: 0 success, 2 validation error, 3 when convergence failures were
flagged in the output.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .engine import SteadySpec, steady_state
from .errors import RingQedError
from .experiments import (
    ExperimentConfig,
    PRESET_NAMES,
    directionality_oracle,
    directionality_run,
    run,
    steady_observables,
)
from .model import ModelKind, build_space, collapse_operators, full_hamiltonian
from .correlation import g2_numeric
from .tables import SweepTable
from . import oracles

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--j", type=float, default=None, help="tunneling amplitude J/kappa")
    parser.add_argument("--phi", type=float, default=None, help="double-well phase 2 pi d/lambda")
    parser.add_argument("--delta", type=float, default=None, help="drive-cavity detuning/kappa")
    parser.add_argument("--gamma", type=float, default=None, help="atomic decay rate/kappa")
    parser.add_argument("--g", type=float, default=None, help="atom-cavity coupling/kappa")
    parser.add_argument("--omega", type=float, default=None, help="drive Rabi frequency/kappa")
    parser.add_argument("--big-delta", type=float, default=None,
                        help="drive-atom detuning/kappa (default 200)")
    parser.add_argument("--nmax", type=int, default=None, help="Fock truncation")
    parser.add_argument("--rtol", type=float, default=1e-8, help="integrator relative tolerance")
    parser.add_argument("--out", type=str, default=None, help="output file path")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--config", type=str, default=None, help="flat JSON config file")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for grids")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ringqed", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=f"ringqed {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p_steady = sub.add_parser("steady", help="steady-state observables vs oracles")
    _add_common(p_steady)

    p_dyn = sub.add_parser("dynamics", help="observable time series from |L>")
    _add_common(p_dyn)
    p_dyn.add_argument("--t-max", type=float, default=4.0)
    p_dyn.add_argument("--points", type=int, default=201)

    p_g2 = sub.add_parser("g2", help="two-time correlation g2(tau)")
    _add_common(p_g2)
    p_g2.add_argument("--tau-max", type=float, default=12.0)
    p_g2.add_argument("--points", type=int, default=400)
    p_g2.add_argument("--mode", choices=("CW", "CCW"), default="CW")

    p_sweep = sub.add_parser("sweep", help="steady-state sweep over one parameter")
    _add_common(p_sweep)
    p_sweep.add_argument("--axis", type=str, required=False, help="parameter name to sweep")
    p_sweep.add_argument("--values", type=str, required=False,
                         help="comma-separated axis values")

    p_pre = sub.add_parser("preset", help="figure-reproduction presets")
    p_pre.add_argument("name", choices=PRESET_NAMES)
    _add_common(p_pre)
    return ap


def _file_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError("config file must hold a flat JSON object")
    return obj


def _collect_params(args, file_cfg: dict) -> dict:
    params = dict(file_cfg.get("params", {}))
    for flag, field in (("j", "J"), ("phi", "phi"), ("delta", "delta"),
                        ("gamma", "gamma"), ("g", "g"), ("omega", "Omega"),
                        ("big_delta", "Delta")):
        val = getattr(args, flag, None)
        if val is not None:
            params[field] = val
    return params


def _make_config(args, command_defaults: dict | None = None) -> ExperimentConfig:
    file_cfg = _file_config(getattr(args, "config", None))
    params = _collect_params(args, file_cfg)
    fmt = args.format or file_cfg.get("format") or "csv"
    return ExperimentConfig(
        preset=getattr(args, "name", None) or file_cfg.get("preset"),
        params=params,
        n_max=args.nmax if args.nmax is not None else file_cfg.get("n_max"),
        sweep=(command_defaults or {}).get("sweep", file_cfg.get("sweep")),
        output=args.out or file_cfg.get("output"),
        format=fmt,
        jobs=args.jobs,
        rtol=args.rtol,
    )


def _emit(table: SweepTable, cfg: ExperimentConfig):
    if cfg.output:
        path = table.write(cfg.output, cfg.format)
        print(f"wrote {path} ({table.nrows} rows)")
    else:
        sys.stdout.write(table.to_csv())


def _cmd_steady(args) -> int:
    cfg = _make_config(args)
    p = cfg.system_params()
    n_max = cfg.n_max if cfg.n_max is not None else 2
    row = steady_observables(p, n_max)
    table = SweepTable(columns={k: [v] for k, v in row.items()},
                       meta={**cfg.resolved_meta(), "n_max": n_max})
    _emit(table, cfg)
    return EXIT_OK


def _cmd_dynamics(args) -> int:
    cfg = _make_config(args)
    p = cfg.system_params()
    n_max = cfg.n_max if cfg.n_max is not None else 2
    t_grid = np.linspace(0.0, args.t_max, args.points)
    traj, dn, pop = directionality_run(p, n_max, t_grid, rtol=cfg.rtol)
    dn_o, pop_o = directionality_oracle(p, t_grid)
    scale = max(np.max(np.abs(dn_o)), np.max(np.abs(dn)), 1e-12)
    table = SweepTable(
        columns={"t": list(t_grid), "dn_numeric": list(dn), "dn_oracle": list(dn_o),
                 "pop_numeric": list(pop), "pop_oracle": list(pop_o),
                 "rel_dev": list(np.abs(dn - dn_o) / scale),
                 "ok": [1] * len(t_grid)},
        meta={**cfg.resolved_meta(), "n_max": n_max},
    )
    _emit(table, cfg)
    return EXIT_OK


def _cmd_g2(args) -> int:
    cfg = _make_config(args)
    p = cfg.system_params()
    n_max = cfg.n_max if cfg.n_max is not None else 3
    taus = np.linspace(0.0, args.tau_max, args.points)
    space = build_space(ModelKind.FULL_LAB, n_max)
    h = full_hamiltonian(p, space)
    jumps = collapse_operators(p, space)
    rho = steady_state(h, jumps, SteadySpec(method="nullspace"))
    series = g2_numeric(h, jumps, rho, args.mode, taus, rtol=cfg.rtol)
    oracle = oracles.g2_closed(p, taus)
    table = SweepTable(
        columns={"tau": list(taus), "g2_numeric": list(series.values),
                 "g2_oracle": list(oracle),
                 "rel_dev": list(np.abs(series.values - oracle) / np.maximum(1.0, np.abs(oracle))),
                 "ok": [1] * len(taus)},
        meta={**cfg.resolved_meta(), "n_max": n_max, "mode": args.mode},
    )
    _emit(table, cfg)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    file_cfg = _file_config(getattr(args, "config", None))
    sweep = file_cfg.get("sweep")
    if args.axis and args.values:
        sweep = {"name": args.axis, "values": [float(v) for v in args.values.split(",")]}
    if sweep is None:
        raise ValueError("sweep needs --axis and --values (or a config file)")
    cfg = _make_config(args, command_defaults={"sweep": sweep})
    table, nfail = run(cfg)
    if not cfg.output:
        sys.stdout.write(table.to_csv())
    else:
        print(f"wrote {cfg.output} ({table.nrows} rows, {nfail} failed)")
    return EXIT_CONVERGENCE if nfail else EXIT_OK


def _cmd_preset(args) -> int:
    cfg = _make_config(args)
    table, nfail = run(cfg)
    if not cfg.output:
        sys.stdout.write(table.to_csv())
    else:
        print(f"wrote {cfg.output} ({table.nrows} rows, {nfail} failed)")
    return EXIT_CONVERGENCE if nfail else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags already
        return int(exc.code or 0)
    handlers = {"steady": _cmd_steady, "dynamics": _cmd_dynamics, "g2": _cmd_g2,
                "sweep": _cmd_sweep, "preset": _cmd_preset}
    try:
        return handlers[args.command](args)
    except (RingQedError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
