#!/usr/bin/env python3
"""Delay-probability scaling experiment.

Holds a two-node tandem at loads approaching saturation while scaling the
server counts like 1/(1 - rho), then compares the simulated bottleneck
delay probability against its closed-form approximation.  The gap should
shrink as the load climbs.

Example:
    python3 scripts/scaling_trend.py --loads 0.8,0.9,0.95 --reps 4 \
        --jobs 150000 --out trend.csv
"""

import argparse
import csv
import sys

from lpsnet import (Exponential, SimConfig, delay_probability,
                    find_bottleneck, simulate, tandem)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--loads", default="0.8,0.9,0.95",
                        help="comma-separated utilizations (default 0.8,0.9,0.95)")
    parser.add_argument("--means", default="1,2",
                        help="service means for the two tandem stages (default 1,2)")
    parser.add_argument("--base-servers", default="1,3",
                        help="server counts at load 0, scaled by 1/(1-rho) (default 1,3)")
    parser.add_argument("--seed", type=int, default=1, help="random seed (default 1)")
    parser.add_argument("--reps", type=int, default=4,
                        help="replications per load (default 4)")
    parser.add_argument("--jobs", type=int, default=150_000,
                        help="completed jobs per replication (default 150000)")
    parser.add_argument("--out", help="also write the table to this CSV file")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    loads = [float(v) for v in args.loads.split(",")]
    means = [float(v) for v in args.means.split(",")]
    base = [int(v) for v in args.base_servers.split(",")]
    if len(means) != 2 or len(base) != 2:
        print("error: --means and --base-servers need exactly two values",
              file=sys.stderr)
        return 1

    rows = []
    total_mean = sum(means)
    for rho in loads:
        if not 0.0 < rho < 1.0:
            print(f"error: load {rho} outside (0, 1)", file=sys.stderr)
            return 1
        servers = [max(1, round(k / (1.0 - rho))) for k in base]
        model = tandem(rho / total_mean,
                       [Exponential(means[0]), Exponential(means[1])], servers)
        bottleneck, _, _ = find_bottleneck(model)
        formula, _ = delay_probability(model)
        est = simulate(model, SimConfig(seed=args.seed, replications=args.reps,
                                        horizon_jobs=args.jobs))
        simulated = est.delay_probability[bottleneck]
        rows.append({
            "load": rho,
            "servers": "x".join(map(str, servers)),
            "bottleneck": bottleneck,
            "simulated": simulated.value,
            "half_width": simulated.half_width,
            "closed_form": formula,
            "gap": abs(simulated.value - formula),
        })

    header = f"{'load':>6} {'servers':>9} {'simulated':>10} {'±hw':>9} " \
             f"{'closed form':>12} {'gap':>9}"
    print(header)
    print("-" * len(header))
    for r in rows:
        hw = r["half_width"] if r["half_width"] is not None else float("nan")
        print(f"{r['load']:>6.3g} {r['servers']:>9} {r['simulated']:>10.5f} "
              f"{hw:>9.2g} {r['closed_form']:>12.5f} {r['gap']:>9.5f}")
    gaps = [r["gap"] for r in rows]
    shrinking = all(a > b for a, b in zip(gaps, gaps[1:]))
    print(f"\ngap monotone shrinking: {'yes' if shrinking else 'NO'}")

    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
