"""Single-spin coherence time and Bell-pair hashing-bound decay time versus temperature.

    python3 scripts/decoherence_times.py --gamma 1e6 --temps 0.1 0.25 0.5 1.0
"""

import argparse

from g4vdecoh.g4v import ModelConstants
from g4vdecoh.metrics import bell_pair, decoherence_scan, equal_superposition


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=50e9, help="splitting in Hz")
    ap.add_argument("--gamma", type=float, default=1e6, help="coupling rate in 1/s")
    ap.add_argument("--temps", type=float, nargs="+", default=[0.1, 0.25, 0.5, 1.0])
    ap.add_argument("--samples", type=int, default=201)
    args = ap.parse_args()

    grid = [ModelConstants.physical(args.delta, t, gamma=args.gamma) for t in args.temps]
    single = decoherence_scan(grid, equal_superposition(), [5 / (c.gamma * c.nbar) for c in grid], args.samples)
    pair = decoherence_scan(grid, bell_pair(), [1 / (c.gamma * c.nbar) for c in grid], args.samples)

    print(f"{'T [K]':>7} {'nbar':>11} {'1/(g nbar) [s]':>15} {'tau_C1 [s]':>12} {'tau_C2 [s]':>12} {'ratio':>7}")
    for c, s, p in zip(grid, single, pair):
        print(f"{c.temperature:7.3g} {c.nbar:11.4e} {1 / (c.gamma * c.nbar):15.5e} "
              f"{s.tau:12.5e} {p.tau:12.5e} {p.tau / s.tau:7.3f}")


if __name__ == "__main__":
    main()
