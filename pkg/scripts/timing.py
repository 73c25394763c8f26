"""Mean wall-clock per estimator call on the N=6, K=2 benchmark scenario.

Absolute numbers depend on the machine; only the ordering is meaningful.

    python3 scripts/timing.py --trials 200 --out timing.csv
"""
import argparse

from twtoa.bench import ExperimentSpec, timing_report, write_timing
from twtoa.estimators import METHODS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out")
    args = ap.parse_args()
    rows = timing_report(ExperimentSpec(n_anchors=6, rounds=2, noise_grid=(10.0,), trials=args.trials,
                                        methods=METHODS, master_seed=args.seed))
    if args.out:
        write_timing(rows, args.out)
    for r in rows:
        print(f"{r.method:5s} {r.mean_ms:9.3f} ms  {r.mean_iterations:6.2f} iterations")


if __name__ == "__main__":
    main()
