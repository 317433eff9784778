"""Command-line entry points for simulation, sweeps, convergence studies,
and the convergence-condition checker."""

import argparse
import sys
from dataclasses import replace

from .channel import generate_channel_set
from .harness import (convergence_run, default_config, load_config,
                      run_strategy, save_config, sweep)
from .ofpb import check_convergence_conditions


def _base_config(args):
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_config()


def _cmd_simulate(args):
    cfg = _base_config(args)
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    chset = generate_channel_set(cfg.geometry, cfg.channel, cfg.base_seed,
                                 noise_power=cfg.noise_power)
    print(f"seed={cfg.base_seed}  N_A={cfg.geometry.n_alice}  "
          f"N_I={cfg.geometry.n_irs}  P_max={cfg.p_max:.3g} W")
    for strategy in cfg.strategies:
        row = run_strategy(strategy, chset, cfg, cfg.base_seed)
        print(f"  {strategy:12s} SR={row.secrecy_rate:8.4f} bits/s/Hz  "
              f"admm_iters={row.admm_iters:4d}  converged={row.converged}  "
              f"({row.ms:.1f} ms)")
    return 0


def _cmd_sweep(args):
    cfg = _base_config(args)
    overrides = {}
    if args.var:
        overrides["sweep_var"] = args.var
    if args.values:
        overrides["sweep_values"] = tuple(int(v) for v in args.values.split(","))
    if args.trials:
        overrides["trials"] = args.trials
    if args.out:
        overrides["output_dir"] = args.out
    cfg = replace(cfg, **overrides)
    rows, path = sweep(cfg)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def _parse_grid(text):
    grid = []
    for part in text.split(";"):
        vals = [float(v) for v in part.split(",")]
        if len(vals) != 3:
            raise ValueError("each grid entry must be 'l_y,rho1,rho2'")
        grid.append(tuple(vals))
    return grid


def _cmd_convergence(args):
    cfg = _base_config(args)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    grid = _parse_grid(args.grid)
    summaries, _ = convergence_run(cfg, grid)
    for s in summaries:
        flag = "" if s["converged"] else "  [not converged]"
        print(f"  {s['setting']:24s} iters={s['iterations']:5d} "
              f"final={s['final_objective']:.6e}{flag}")
    return 0


def _cmd_check_conditions(args):
    report = check_convergence_conditions(args.rho1, args.rho2, args.ly, args.ly2)
    print(f"eps_x        = {report.eps_x:.6g}")
    print(f"eps_y1       = {report.eps_y1:.6g}")
    print(f"eps_y2       = {report.eps_y2:.6g}")
    print(f"rho1 - 5*l_y = {report.rho1_minus_5ly:.6g}")
    print("sufficient conditions satisfied:", report.satisfied)
    return 0


def _cmd_write_config(args):
    save_config(default_config(), args.out)
    print(f"wrote default config to {args.out}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="irsec",
        description="IRS-assisted mmWave secrecy beamforming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run every strategy once on one channel")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep to results.csv")
    p.add_argument("--config")
    p.add_argument("--var", choices=("n-irs", "n-alice"))
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("convergence", help="solver traces over a parameter grid")
    p.add_argument("--config")
    p.add_argument("--grid", required=True,
                   help="semicolon-separated 'l_y,rho1,rho2' triples")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("check-conditions",
                       help="evaluate the sufficient convergence conditions")
    p.add_argument("--rho1", type=float, required=True)
    p.add_argument("--rho2", type=float, required=True)
    p.add_argument("--ly", type=float, required=True)
    p.add_argument("--ly2", type=float, default=1.0)
    p.set_defaults(func=_cmd_check_conditions)

    p = sub.add_parser("write-config", help="write the default config as JSON")
    p.add_argument("--out", default="config.json")
    p.set_defaults(func=_cmd_write_config)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
