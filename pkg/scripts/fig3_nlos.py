"""RMSE versus noise level under NLOS contamination (N=5, p=0.2, bias up to 5 m).

    python3 scripts/fig3_nlos.py --out results/fig3_nlos.csv [--trials 100]
"""
import argparse
import dataclasses
from pathlib import Path

from twtoa import config
from twtoa.bench import run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "fig3_nlos.json")
    ap.add_argument("--out", default="fig3_nlos.csv")
    ap.add_argument("--trials", type=int)
    args = ap.parse_args()
    rc = config.load(args.config)
    if args.trials:
        rc = dataclasses.replace(rc, trials=args.trials)
    table = run_experiment(rc.spec())
    table.write_csv(args.out)
    for r in table.rows:
        print(f"{r.method:6s} {r.c_sigma_m:6g} m  rmse {r.rmse_m:8.3f}  crlb {r.crlb_m:8.3f}")


if __name__ == "__main__":
    main()
