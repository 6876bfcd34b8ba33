"""Command line shell: configuration, orchestration, persistence.

Subcommands: init | run | picard | norms | tuple | diagnose | monitor |
compare | gauge | flow.  Exit codes: 0 success, 1 configuration/validation
problem, 2 numerical failure (blow-up or no contraction).  All file output
is atomic (temp + rename), CSV files carry unit-tagged headers, and results
are independent of the thread count (--threads or $VPFIELD_THREADS).
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import parallel
from .config import TEMPLATE, dump_config, parse_config
from .errors import BlowUp, ConfigError, NoContraction, VpfieldError
from .fields import lp_norm, modulus_squared
from .norms import a_norm, b_norm, default_radius_set
from .profiles import sample
from .snapio import atomic_write_text, read_snapshot, write_snapshot

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2


def _ensure_outdir(cfg):
    path = cfg["output.dir"]
    os.makedirs(path, exist_ok=True)
    return path


def _write_rows_csv(path, header, lines):
    atomic_write_text(path, "\n".join([header] + lines) + "\n")


def _initial_field(cfg):
    grid = cfg.grid()
    return sample(grid, cfg.profile())


def _radius_set(cfg, grid):
    rs = cfg["norms.radius_set"]
    if rs == "auto":
        return default_radius_set(grid.spacings, grid.shape)
    return rs


def cmd_init(args):
    atomic_write_text(args.path, TEMPLATE)
    print(f"wrote template config to {args.path}")
    return EXIT_OK


def cmd_run(args):
    from .solver import run
    cfg = parse_config(args.config)
    outdir = _ensure_outdir(cfg)
    alpha0 = _initial_field(cfg)
    scfg = cfg.solver_config()
    if scfg.radius_set == "auto":
        from dataclasses import replace
        scfg = replace(scfg, radius_set=_radius_set(cfg, alpha0.grid))
    traj = run(alpha0, cfg.kernel(), scfg)
    csv_path = os.path.join(outdir, cfg["output.csv"])
    _write_rows_csv(csv_path, traj.rows[0].HEADER, [r.csv() for r in traj.rows])
    every = cfg["output.snapshot_every"]
    for i, (t, fieldobj) in enumerate(traj.stored):
        last = i == len(traj.stored) - 1
        if last or (every > 0 and i % every == 0):
            write_snapshot(os.path.join(outdir, f"state_{t:.6f}.snap"), fieldobj)
    print(f"run complete: {len(traj.rows)} rows -> {csv_path}")
    print(f"l2 drift: {traj.l2_drift():.3e}")
    return EXIT_OK


def cmd_picard(args):
    from .solver import picard_solve
    cfg = parse_config(args.config)
    outdir = _ensure_outdir(cfg)
    alpha0 = _initial_field(cfg)
    traj, log = picard_solve(alpha0, cfg.kernel(), cfg.solver_config())
    write_snapshot(os.path.join(outdir, "picard_final.snap"), traj.final())
    report = {
        "provenance": traj.provenance,
        "converged": log.converged,
        "iterations": log.iterations,
        "distances": log.distances,
    }
    path = os.path.join(outdir, "picard_log.json")
    atomic_write_text(path, json.dumps(report, indent=2) + "\n")
    print(f"picard: {'converged' if log.converged else 'stopped'} "
          f"after {log.iterations} iterations -> {path}")
    return EXIT_OK


def cmd_norms(args):
    field = read_snapshot(args.snapshot)
    grid = field.grid
    radius_set = tuple(float(r) for r in args.radius_set.split(",")) \
        if args.radius_set else default_radius_set(grid.spacings, grid.shape)
    kappa = args.kappa if args.kappa is not None else float(2 * grid.d)
    if args.with_gradient:
        from .chartuple import gradient
        report = b_norm(field, gradient(field, "all"), kappa, args.p, radius_set)
    else:
        report = a_norm(field, kappa, args.p, radius_set)
    text = json.dumps(report.to_dict(), indent=2) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
        print(f"wrote norm report to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_tuple(args):
    from .chartuple import characteristic_tuple
    cfg = parse_config(args.config)
    field = read_snapshot(args.snapshot)
    tup = characteristic_tuple(field, cfg.kernel(), cfg["conv.method"])
    base, _ = os.path.splitext(args.snapshot)
    paths = {}
    for name, member in (("rho", tup.rho), ("force", tup.force),
                         ("phase_density", tup.phase_density),
                         ("phase_force", tup.phase_force)):
        path = f"{base}_{name}.snap"
        write_snapshot(path, member)
        paths[name] = path
    print(json.dumps(paths, indent=2))
    return EXIT_OK


def cmd_diagnose(args):
    from .chartuple import characteristic_tuple
    from .diagnostics import energy_terms, moment_scalar, velocity_moment
    cfg = parse_config(args.config)
    field = read_snapshot(args.snapshot)
    kernel = cfg.kernel()
    tup = characteristic_tuple(field, kernel, cfg["conv.method"])
    H, H_vl = energy_terms(field, tup, kernel)
    from .fields import vector_magnitude
    report = {
        "l2_norm": lp_norm(field, 2),
        "sup_norm": lp_norm(field, np.inf),
        "kinetic": 0.5 * moment_scalar(field, 2),
        "energy_h": H,
        "energy_hvl": H_vl,
        "rho_inf": float(tup.rho.values.max()),
        "force_inf": float(vector_magnitude(tup.force).max()),
        "re_k_max": float(np.abs(tup.phase_force.values.real).max()),
        "moments": {str(k): moment_scalar(field, k)
                    for k in cfg["diagnostics.k_list"]},
    }
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_monitor(args):
    from .diagnostics import globality_monitor
    from .solver import run
    cfg = parse_config(args.config)
    outdir = _ensure_outdir(cfg)
    alpha0 = _initial_field(cfg)
    traj = run(alpha0, cfg.kernel(), cfg.solver_config())
    mon = globality_monitor(traj, cfg["diagnostics.p_list"],
                            cfg["diagnostics.k_list"], cfg["norms.kappa"])
    cols = ["t [time]", "force_inf [accel]"]
    cols += [f"rho_p{p:g} [density] (admissible={mon.p_admissible[p]})"
             for p in mon.rho_p]
    cols += [f"moment_k{k:g} [mass*vel^k] (admissible={mon.k_admissible[k]})"
             for k in mon.moments]
    lines = []
    for i, t in enumerate(mon.times):
        vals = [t, mon.force_inf[i]]
        vals += [mon.rho_p[p][i] for p in mon.rho_p]
        vals += [mon.moments[k][i] for k in mon.moments]
        lines.append(",".join(repr(v) for v in vals))
    path = os.path.join(outdir, "monitor.csv")
    _write_rows_csv(path, ",".join(cols), lines)
    print(f"monitor series -> {path} "
          f"(p window {mon.p_window}, k threshold {mon.k_threshold:g})")
    return EXIT_OK


def cmd_compare(args):
    from .fields import RealField
    from .oracle import compare, run_vlasov
    from .solver import run
    cfg = parse_config(args.config)
    outdir = _ensure_outdir(cfg)
    alpha0 = _initial_field(cfg)
    kernel = cfg.kernel()
    scfg = cfg.solver_config()
    traj_a = run(alpha0, kernel, scfg)
    f0 = modulus_squared(alpha0)
    traj_f = run_vlasov(f0, kernel, scfg)
    rows = compare(traj_a, traj_f)
    header = ("t [time],gap_l1 [mass],gap_l2 [mass/sqrt(vol)],"
              "gap_linf [density],rel_l1 [1]")
    lines = [",".join(repr(v) for v in (r.t, r.gap_l1, r.gap_l2, r.gap_linf,
                                        r.rel_l1)) for r in rows]
    path = os.path.join(outdir, "compare.csv")
    _write_rows_csv(path, header, lines)
    print(f"compare gaps -> {path} (final rel L1 gap {rows[-1].rel_l1:.3e})")
    return EXIT_OK


def cmd_gauge(args):
    from .diagnostics import gauge_shift
    cfg = parse_config(args.config)
    outdir = _ensure_outdir(cfg)
    alpha0 = _initial_field(cfg)
    base, shifted = gauge_shift(alpha0, cfg.kernel(), cfg.solver_config(),
                                args.c)
    lines = []
    for (t, f0), (_, fc) in zip(base.stored, shifted.stored):
        gap = float(np.abs(modulus_squared(fc).values
                           - modulus_squared(f0).values).max())
        mask = np.abs(f0.values) > 1e-6
        if mask.any():
            ratio = fc.values[mask] / f0.values[mask]
            spread = float(np.abs(ratio - ratio.flat[0]).max())
            arg = float(np.angle(ratio.flat[0]))
        else:
            spread, arg = 0.0, 0.0
        lines.append(",".join(repr(v) for v in (t, gap, spread, arg)))
    path = os.path.join(outdir, "gauge.csv")
    _write_rows_csv(path, "t [time],density_gap [density],"
                          "phase_spread [1],phase_arg [rad]", lines)
    print(f"gauge experiment (c={args.c}) -> {path}")
    return EXIT_OK


def cmd_flow(args):
    from .chartuple import characteristic_tuple
    from .flow import ForceSampler, integrate_flow
    cfg = parse_config(args.config)
    outdir = _ensure_outdir(cfg)
    alpha0 = _initial_field(cfg)
    grid = alpha0.grid
    tup = characteristic_tuple(alpha0, cfg.kernel(), cfg["conv.method"])
    sampler = ForceSampler.constant(grid, tup.force.values, 0.0)
    seeds = grid.node_coordinates(np.arange(grid.num_nodes, dtype=np.int64))
    fmap = integrate_flow(sampler, args.s, args.t, seeds,
                          substeps=cfg["solver.substeps"])
    path = os.path.join(outdir, "flowmap.npz")
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        np.savez(fh, s=fmap.s, t=fmap.t, X=fmap.X, V=fmap.V, seeds=fmap.seeds)
    os.replace(tmp, path)
    print(f"flow map Z({args.s}, {args.t}) -> {path}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(
        prog="vpfield",
        description="wave-density Vlasov-Poisson laboratory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $VPFIELD_THREADS or 1); "
                        "results are identical for any value")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("init", help="write a template config")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_init)

    for name, fn, hlp in (("run", cmd_run, "evolve and emit CSV + snapshots"),
                          ("picard", cmd_picard, "fixed-point validation run"),
                          ("monitor", cmd_monitor, "globality monitor series"),
                          ("compare", cmd_compare, "wave vs classical oracle"),
                          ):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("config")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("norms", help="norm report for a snapshot")
    sp.add_argument("snapshot")
    sp.add_argument("--kappa", type=float, default=None)
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--radius-set", default=None,
                    help="comma list of radii (default: geometric family)")
    sp.add_argument("--with-gradient", action="store_true",
                    help="include first derivatives (order-1 norm)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_norms)

    sp = sub.add_parser("tuple", help="characteristic tuple of a snapshot")
    sp.add_argument("snapshot")
    sp.add_argument("--config", required=True)
    sp.set_defaults(func=cmd_tuple)

    sp = sub.add_parser("diagnose", help="scalar diagnostics of a snapshot")
    sp.add_argument("snapshot")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("gauge", help="paired runs with shifted phase force")
    sp.add_argument("config")
    sp.add_argument("--c", type=float, default=1.0)
    sp.set_defaults(func=cmd_gauge)

    sp = sub.add_parser("flow", help="dump a flow map for debugging")
    sp.add_argument("config")
    sp.add_argument("--s", type=float, default=0.0)
    sp.add_argument("--t", type=float, default=0.1)
    sp.set_defaults(func=cmd_flow)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        parallel.set_thread_count(args.threads)
    try:
        return args.func(args)
    except ConfigError as exc:
        if hasattr(exc, "violations"):
            for v in exc.violations:
                print(f"config error: {v}", file=sys.stderr)
        else:
            print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUp, NoContraction) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VpfieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
