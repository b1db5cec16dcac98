#!/usr/bin/env python3
"""Sweep fluctuation amplitudes over a ladder of population sizes.

Runs the asynchronous best-response chain on a profile for several sizes
and replicate counts, then prints the per-size median amplitude of the
total A-share after burn-in. Writes per-replicate rows as CSV.
"""

import argparse
import json
from pathlib import Path

from brpop.experiments import (
    fluctuation_sweep,
    median_amplitude_by_size,
    write_sweep_csv,
)
from brpop.model import parse_profile

REPO = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--config",
        default=str(REPO / "configs" / "one_anti_five_coord.json"),
    )
    ap.add_argument("--sizes", default="30,120,480,1920")
    ap.add_argument("--replicates", type=int, default=50)
    ap.add_argument("--steps-per-agent", type=int, default=30)
    ap.add_argument("--burn-in-fraction", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--output", default="sweep.csv")
    args = ap.parse_args()

    with open(args.config) as fh:
        profile = parse_profile(json.load(fh))
    sizes = [int(s) for s in args.sizes.split(",")]

    rows = fluctuation_sweep(
        profile,
        sizes=sizes,
        replicates=args.replicates,
        steps_per_agent=args.steps_per_agent,
        burn_in_fraction=args.burn_in_fraction,
        master_seed=args.seed,
    )
    write_sweep_csv(rows, args.output)
    print(f"wrote {len(rows)} rows to {args.output}")

    medians = median_amplitude_by_size(rows)
    print(f"{'N':>8}  {'median amplitude':>18}  {'decimal':>10}")
    for n in sizes:
        print(f"{n:>8}  {str(medians[n]):>18}  {float(medians[n]):>10.5f}")
    zero = sum(1 for r in rows if r.amplitude == 0)
    print(f"{zero}/{len(rows)} replicates were absorbed before the window")


if __name__ == "__main__":
    main()
