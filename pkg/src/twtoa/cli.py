"""Command-line front end.

    twtoa simulate --config cfg.json --out batch.csv
    twtoa estimate --config cfg.json --batch batch.csv --method sqls
    twtoa bench    --config configs/fig2_rmse.json --out rmse.csv
    twtoa crlb     --n-anchors 6 --c-sigma-m 10
    twtoa trace    --config configs/fig4_trace.json --out traces.csv

Exit codes: 0 success, 2 invalid configuration, 3 estimator failure rate
above the benchmark threshold. Every command that writes ``--out`` also
writes the effective configuration to ``<out>.config.json``.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys

import numpy as np

from . import config as config_mod
from .bench import (bench_crlb, convergence_trace, draw_target, run_estimator, run_experiment,
                    write_traces)
from .errors import ConfigError, ExperimentFailure, TwToaError
from .estimators import METHODS, CccpConfig
from .simulator import SimConfig, make_rng, read_batch_csv, simulate, write_batch_csv

REPORT_HEADER = ("method", "x1", "x2", "w", "status", "iterations", "residual", "seed")


def _parser():
    p = argparse.ArgumentParser(prog="twtoa", description="TW-TOA positioning under clock skew")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--seed", type=int)
    common.add_argument("--method", help="estimator name, or comma-separated list for bench")
    common.add_argument("--n-anchors", "--n", dest="n_anchors", type=int)
    common.add_argument("--k-rounds", dest="k_rounds", type=int)
    common.add_argument("--c-sigma-m", "--c-sigma", dest="c_sigma_m", type=float, action="append",
                        help="noise level c*sigma in metres (repeatable)")
    common.add_argument("--nlos-prob", dest="nlos_prob", type=float)
    common.add_argument("--trials", type=int)
    common.add_argument("--fix-duplicate-anchor", dest="fix_duplicate_anchor", action="store_true",
                        default=None)
    for name, helptext in [("simulate", "draw one measurement batch"),
                           ("estimate", "run one estimator on a batch file"),
                           ("bench", "Monte Carlo RMSE table"),
                           ("crlb", "position CRLB averaged over benchmark targets"),
                           ("trace", "CCCP residual traces from random starts")]:
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name == "estimate":
            sp.add_argument("--batch", required=True, help="batch CSV from 'simulate'")
        if name == "bench":
            sp.add_argument("--detail", help="also write per-trial rows to this CSV")
        if name in ("simulate", "estimate"):
            sp.add_argument("--noiseless", action="store_true", help="simulate with zero noise")
    return p


def _apply_overrides(rc, args):
    raw = rc.effective()
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.n_anchors is not None:
        raw["n_anchors"] = args.n_anchors
    if args.k_rounds is not None:
        raw["k_rounds"] = args.k_rounds
    if args.c_sigma_m:
        raw["c_sigma_m"] = args.c_sigma_m
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.fix_duplicate_anchor:
        raw["fix_duplicate_anchor"] = True
    if args.nlos_prob is not None:
        nl = raw["nlos"] or {"probability": 0.0, "bias_max_m": 5.0}
        raw["nlos"] = None if args.nlos_prob == 0 else {**nl, "probability": args.nlos_prob}
    if args.method and args.command == "bench":
        raw["methods"] = [m.strip() for m in args.method.split(",")]
    if getattr(args, "noiseless", False):
        raw["noise_scale"] = 0.0
    return config_mod.from_dict(raw)


def _write_sidecar(rc, out):
    if out:
        with open(f"{out}.config.json", "w") as fh:
            fh.write(config_mod.dumps(rc))


def _scenario(rc):
    spec = rc.spec()
    if rc.target_m is None:
        target = draw_target(spec, make_rng(rc.seed, 0))
        rc = dataclasses.replace(rc, target_m=(float(target[0]), float(target[1])))
    return rc, spec.scenario(np.array(rc.target_m), rc.c_sigma_m[0])


def cmd_simulate(rc, args):
    rc, scen = _scenario(rc)
    batch = simulate(scen, SimConfig(seed=rc.seed, nlos=rc.spec().nlos, noise_scale=rc.noise_scale),
                     make_rng(rc.seed, 0, 1))
    if args.out:
        write_batch_csv(batch, args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        for k in range(batch.rounds):
            for i in range(batch.n_anchors):
                w.writerow((k, i, repr(float(batch.z[k, i])), repr(float(batch.t_hat[k, i]))))
    _write_sidecar(rc, args.out)
    return 0


def cmd_estimate(rc, args):
    method = (args.method or "SQLS").upper()
    if method not in METHODS:
        raise ConfigError("method", f"must be one of {list(METHODS)}")
    rc, scen = _scenario(rc)
    batch = read_batch_csv(args.batch)
    if batch.n_anchors != scen.n_anchors:
        raise ConfigError("n_anchors", f"batch has {batch.n_anchors} anchors, config has {scen.n_anchors}")
    if batch.rounds != scen.rounds:
        rc = dataclasses.replace(rc, k_rounds=batch.rounds)
        rc, scen = _scenario(rc)
    rep = run_estimator(method, batch, scen, CccpConfig(max_outer=rc.cccp_max_outer))
    row = (rep.method, repr(float(rep.position[0])), repr(float(rep.position[1])), repr(float(rep.skew)),
           str(rep.status), rep.iterations, repr(float(rep.residual_l1)), rc.seed)
    print(f"x = ({row[1]}, {row[2]}) m  w = {row[3]}  status = {row[4]}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_HEADER)
            w.writerow(row)
    _write_sidecar(rc, args.out)
    return 0


def cmd_bench(rc, args):
    spec = rc.spec()
    code = 0
    try:
        table = run_experiment(spec)
    except ExperimentFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        table, code = exc.table, 3
    if args.out:
        table.write_csv(args.out)
    else:
        for r in table.rows:
            print(f"{r.method},{r.N},{r.K},{r.c_sigma_m!r},{r.trials},{r.failures},{r.rmse_m!r},{r.crlb_m!r}")
    detail = args.detail or (f"{args.out}.trials.csv" if rc.detail and args.out else None)
    if detail:
        table.write_details(detail, spec)
    _write_sidecar(rc, args.out)
    return code


def cmd_crlb(rc, args):
    curve = bench_crlb(rc.spec())
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("c_sigma_m", "crlb_m"))
            for cs, b in curve:
                w.writerow((repr(cs), repr(b)))
    for cs, b in curve:
        print(repr(b) if len(curve) == 1 else f"{cs!r} {b!r}")
    _write_sidecar(rc, args.out)
    return 0


def cmd_trace(rc, args):
    traces = convergence_trace(rc.spec(), inits=rc.trace_inits, max_outer=rc.trace_max_outer)
    if args.out:
        write_traces(traces, args.out)
    else:
        for i, tr in enumerate(traces):
            print(i, " ".join(f"{v:.6e}" for v in tr))
    _write_sidecar(rc, args.out)
    return 0


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "bench": cmd_bench,
            "crlb": cmd_crlb, "trace": cmd_trace}


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = _apply_overrides(config_mod.load(args.config), args)
        return COMMANDS[args.command](rc, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TwToaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
