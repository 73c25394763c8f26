"""CCCP l1-residual traces from random starts on one noisy batch.

    python3 scripts/fig4_trace.py --out results/fig4_trace.csv [--n 8]
"""
import argparse
import dataclasses
from pathlib import Path

import numpy as np

from twtoa import config
from twtoa.bench import convergence_trace, write_traces

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=ROOT / "configs" / "fig4_trace.json")
    ap.add_argument("--out", default="fig4_trace.csv")
    ap.add_argument("--n", type=int, help="number of anchors")
    args = ap.parse_args()
    rc = config.load(args.config)
    if args.n:
        rc = dataclasses.replace(rc, n_anchors=args.n)
    traces = np.array(convergence_trace(rc.spec(), rc.trace_inits, rc.trace_max_outer))
    write_traces(traces, args.out)
    rel = traces / traces[:, -1:]
    print("iteration  median(r/r_final)  max(r/r_final)")
    for j in range(traces.shape[1]):
        print(f"{j:9d}  {np.median(rel[:, j]):17.4f}  {np.max(rel[:, j]):14.4f}")


if __name__ == "__main__":
    main()
