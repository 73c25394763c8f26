"""RMSE versus noise level for MLE, LLS, SQLS and CCCP (LOS, N=6 by default).

    python3 scripts/fig2_rmse.py --out results/fig2_rmse.csv [--trials 100] [--n 5 --fix]
"""
import argparse
import dataclasses
from pathlib import Path

from twtoa import config
from twtoa.bench import run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "fig2_rmse.json")
    ap.add_argument("--out", default="fig2_rmse.csv")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--n", type=int, help="number of anchors")
    ap.add_argument("--fix", action="store_true", help="replace the duplicated fifth anchor")
    args = ap.parse_args()
    rc = config.load(args.config)
    if args.trials:
        rc = dataclasses.replace(rc, trials=args.trials)
    if args.n:
        rc = dataclasses.replace(rc, n_anchors=args.n)
    if args.fix:
        rc = dataclasses.replace(rc, fix_duplicate_anchor=True)
    table = run_experiment(rc.spec())
    table.write_csv(args.out)
    print(f"{'method':6s} {'c_sigma_m':>9s} {'rmse_m':>9s} {'crlb_m':>9s} fails")
    for r in table.rows:
        print(f"{r.method:6s} {r.c_sigma_m:9g} {r.rmse_m:9.3f} {r.crlb_m:9.3f} {r.failures}")


if __name__ == "__main__":
    main()
