#!/usr/bin/env python3
"""Fluid state-space-collapse experiment.

Integrates the critical fluid equations from scattered random starting
states and reports how close each trajectory ends to the lifted state of
its own initial workload.  For a critically loaded network the workload is
conserved, so every start should collapse onto the invariant manifold at
exactly its starting workload level.

Example:
    python3 scripts/fluid_relaxation.py model.yaml --starts 20 --out traj.csv
"""

import argparse
import sys

import numpy as np

from lpsnet import (FluidConfig, FluidModel, fit_two_moments, load_model,
                    tandem)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("model", nargs="?",
                        help="model file (default: a built-in two-stage tandem)")
    parser.add_argument("--starts", type=int, default=20,
                        help="number of random starting states (default 20)")
    parser.add_argument("--box", type=float, default=12.0,
                        help="starts drawn uniformly from [0, box]^J (default 12)")
    parser.add_argument("--horizon", type=float, default=500.0,
                        help="integration horizon (default 500)")
    parser.add_argument("--step", type=float, default=0.05,
                        help="integration step (default 0.05)")
    parser.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    parser.add_argument("--out",
                        help="write the trajectory of the worst start to this CSV")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    if args.model:
        network, _ = load_model(args.model)
    else:
        network = tandem(0.7 / 3,
                         [fit_two_moments(1.0, 4.0), fit_two_moments(2.0, 4.0)],
                         [3, 7])
    fluid = FluidModel.from_network(network, critical=True)
    print(f"nodes: {fluid.size}, bottleneck: {fluid.bottleneck}, "
          f"critical workload: {fluid.critical_workload:.6g}")

    rng = np.random.default_rng(args.seed)
    config = FluidConfig(horizon=args.horizon, step=args.step, max_samples=201)
    header = f"{'start':>5} {'workload':>9} {'final gap':>10} {'lyapunov drop':>14}"
    print(header)
    print("-" * len(header))
    worst = (None, -1.0)
    for i in range(args.starts):
        x0 = rng.uniform(0.0, args.box, size=fluid.size)
        target = fluid.invariant_point(fluid.workload(x0))
        traj = fluid.integrate(x0, config)
        gap = float(np.max(np.abs(traj.final_state - target)))
        drop = float(traj.lyapunov[0] - traj.lyapunov[-1])
        print(f"{i:>5} {fluid.workload(x0):>9.4f} {gap:>10.3g} {drop:>14.6g}")
        if gap > worst[1]:
            worst = (traj, gap)
    print(f"\nworst final gap over {args.starts} starts: {worst[1]:.3g}")

    if args.out and worst[0] is not None:
        worst[0].to_csv(args.out)
        print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
