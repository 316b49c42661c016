"""``pairwalk`` command line: one subcommand per output table.

Exit status 0 on success, 1 on invalid input (the message names the key),
2 when propagation aborts on norm drift or the oracle check fails.
Diagnostics go to stderr; CSV files only ever receive data.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Sequence

import numpy as np

from . import config as cfgmod
from .chain import ChainSpec, InitialCondition, build_initial_state
from .csvio import write_correlation, write_map, write_timeseries, write_u_sweep
from .errors import InputError, NumericalFailure
from .experiments import (
    DEFAULT_PEAK_STRIDE, PRESETS, SweepSpec, correlation_snapshot, default_workers,
    run_max_purity_map, run_timeseries, run_u_sweep,
)
from .observables import reduce_to_particle_a
from .propagator import PropagatorConfig, advance, step_count

log = logging.getLogger("pairwalk")

VERIFY_TOL = 1e-10
RHO_TOL = 1e-12

# flag name -> config key
FLAG_KEYS = {
    "n": "n_sites", "j": "j", "u": "u", "m0": "m0", "n0": "n0", "theta": "theta",
    "dt": "dt", "order": "order", "t_final": "t_final", "sample_stride": "sample_stride",
    "u_grid": "u_grid", "theta_grid": "theta_grid",
    "late_window_fraction": "late_window_fraction", "out": "out_path",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model and method")
    g.add_argument("--n", metavar="N", help="number of sites")
    g.add_argument("--j", metavar="J", help="hopping amplitude (default 1)")
    g.add_argument("--u", metavar="U", help="on-site interaction in units of J")
    g.add_argument("--m0", help="initial site of particle a (1-based)")
    g.add_argument("--n0", help="initial site of particle b (1-based)")
    g.add_argument("--theta", help="exchange phase in radians, or 'none' for the product input")
    g.add_argument("--theta-pi-units", action="store_true",
                   help="read theta and theta grid values in units of pi")
    g.add_argument("--dt", help="time step (default 0.01)")
    g.add_argument("--order", help="Taylor truncation order (default 20)")
    g.add_argument("--t-final", help="final time in units of 1/J")
    g.add_argument("--sample-stride", help="steps between records (default 50)")
    g.add_argument("--u-grid", help="'start:stop:count' or comma list")
    g.add_argument("--theta-grid", help="'start:stop:count' or comma list")
    g.add_argument("--late-window-fraction", help="trailing fraction for late-time means (default 0.2)")
    g.add_argument("--out", help="output CSV path")
    g.add_argument("--config", help="key=value configuration file")
    g.add_argument("--preset", choices=sorted(PRESETS), help="full (N=300) or desk (N=201) scale defaults")
    g.add_argument("-q", "--quiet", action="store_true", help="only report errors")


def _add_sweep(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: number of CPUs)")
    p.add_argument("--peak-stride", type=int, default=DEFAULT_PEAK_STRIDE,
                   help=f"steps between purity checks for the maximum (default {DEFAULT_PEAK_STRIDE})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairwalk", description="Two-particle quantum walk with on-site interaction."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="observable time series")
    _add_common(p)

    p = sub.add_parser("sweep-u", help="maximum and late-time purity versus U")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--slice-time", type=float, default=None,
                   help="also report purity at this time (adds a gamma_slice column)")

    p = sub.add_parser("map", help="maximum purity over the theta x U grid")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--method", choices=("sector", "direct"), default="sector",
                   help="evolve the two exchange sectors per U column, or every cell")

    p = sub.add_parser("correlation", help="|f(m, n)|^2 at t_final")
    _add_common(p)

    p = sub.add_parser("verify", help="compare the Taylor propagator with exact diagonalization")
    _add_common(p)
    return parser


def _chain(c: dict[str, Any], u: float = 0.0) -> ChainSpec:
    return ChainSpec(c["n_sites"], c["j"], u)


def _propagation(c: dict[str, Any]) -> PropagatorConfig:
    return PropagatorConfig(dt=c["dt"], order=c["order"], sample_stride=c["sample_stride"])


def _sweep(c: dict[str, Any], args, theta_grid=(0.0,)) -> SweepSpec:
    return SweepSpec(
        chain=_chain(c),
        ic_template=InitialCondition(c["m0"], c["n0"], 0.0),
        u_grid=c["u_grid"],
        theta_grid=theta_grid,
        propagation=_propagation(c),
        t_final=c["t_final"],
        late_window_fraction=c["late_window_fraction"],
        peak_stride=args.peak_stride,
    )


def _workers(args) -> int:
    w = default_workers() if args.workers is None else args.workers
    if w < 1:
        raise InputError(f"workers must be >= 1, got {w}", "workers")
    return w


def _cmd_evolve(c, args) -> int:
    cfgmod.require(c, "n_sites", "m0", "n0", "u", "theta", "t_final", "out_path")
    spec = _chain(c, c["u"])
    ic = InitialCondition(c["m0"], c["n0"], c["theta"])
    cfg = _propagation(c)
    ic.validate(spec.n_sites)
    n_steps = step_count(c["t_final"], cfg.dt)
    log.info("evolve N=%d U=%g: %d steps, %d records", spec.n_sites, spec.interaction,
             n_steps, n_steps // cfg.sample_stride + 1 + (n_steps % cfg.sample_stride > 0))
    trace = run_timeseries(spec, ic, cfg, c["t_final"])
    write_timeseries(trace, c["out_path"])
    log.info("max norm error %.3e; wrote %s", trace.max_norm_error, c["out_path"])
    return 0


def _cmd_sweep_u(c, args) -> int:
    cfgmod.require(c, "n_sites", "m0", "n0", "theta", "t_final", "u_grid", "out_path")
    sweep = _sweep(c, args)
    workers = _workers(args)
    rows = run_u_sweep(sweep, c["theta"], workers=workers, slice_time=args.slice_time)
    write_u_sweep(rows, c["out_path"])
    log.info("wrote %s", c["out_path"])
    return _report_failures([(f"U={r.u:g}", r.error) for r in rows])


def _cmd_map(c, args) -> int:
    cfgmod.require(c, "n_sites", "m0", "n0", "t_final", "u_grid", "theta_grid", "out_path")
    sweep = _sweep(c, args, c["theta_grid"])
    workers = _workers(args)
    result = run_max_purity_map(sweep, workers=workers, method=args.method)
    write_map(result, c["out_path"])
    log.info("wrote %s", c["out_path"])
    return _report_failures([(f"theta={m.theta:g} U={m.u:g}", m.error) for m in result.cells])


def _report_failures(items) -> int:
    failed = [(label, err) for label, err in items if err is not None]
    for label, err in failed:
        print(f"error: cell {label}: {err}", file=sys.stderr)
    return 2 if failed else 0


def _cmd_correlation(c, args) -> int:
    cfgmod.require(c, "n_sites", "m0", "n0", "u", "theta", "t_final", "out_path")
    spec = _chain(c, c["u"])
    snap = correlation_snapshot(spec, InitialCondition(c["m0"], c["n0"], c["theta"]),
                                _propagation(c), c["t_final"])
    write_correlation(snap, c["out_path"])
    log.info("wrote %s (t=%g)", c["out_path"], snap.t)
    return 0


def _cmd_verify(c, args) -> int:
    from .oracle import build_dense, dense_partial_trace, spectral_evolve

    cfgmod.require(c, "n_sites", "u", "t_final")
    N = c["n_sites"]
    # centered neighbor input unless given
    ic = InitialCondition(c.get("m0", max(1, N // 2)), c.get("n0", min(N, N // 2 + 1)),
                          c.get("theta", 0.0))
    spec = _chain(c, c["u"])
    cfg = _propagation(c)
    state0 = build_initial_state(spec, ic)
    n_steps = step_count(c["t_final"], cfg.dt)
    fast = advance(spec, state0, cfg, n_steps)
    exact = spectral_evolve(build_dense(spec), state0, n_steps * cfg.dt)
    dev = float(np.max(np.abs(fast.amplitudes - exact.amplitudes)))
    rho_dev = float(np.max(np.abs(
        reduce_to_particle_a(fast).entries - dense_partial_trace(fast).entries
    )))
    ok = dev <= VERIFY_TOL and rho_dev <= RHO_TOL
    print(f"N={N} U={spec.interaction:g} t={n_steps * cfg.dt:g} m0={ic.m0} n0={ic.n0} "
          f"theta={ic.theta}")
    print(f"max |f_taylor - f_exact| = {dev:.3e} (tolerance {VERIFY_TOL:.0e})")
    print(f"max |rho_gram - rho_trace| = {rho_dev:.3e} (tolerance {RHO_TOL:.0e})")
    print("OK" if ok else "FAIL")
    return 0 if ok else 2


COMMANDS = {
    "evolve": _cmd_evolve,
    "sweep-u": _cmd_sweep_u,
    "map": _cmd_map,
    "correlation": _cmd_correlation,
    "verify": _cmd_verify,
}


def run_cli(argv: Sequence[str] | None = None, environ=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    flags = {key: getattr(args, flag) for flag, key in FLAG_KEYS.items()}
    try:
        c = cfgmod.resolve(flags, args.config, args.preset, environ, args.theta_pi_units)
        return COMMANDS[args.command](c, args)
    except InputError as exc:
        key = f" [{exc.key}]" if exc.key else ""
        print(f"error{key}: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
