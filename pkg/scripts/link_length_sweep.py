"""Hashing bound of the heralded link at the swap and at the herald, versus link length.

    python3 scripts/link_length_sweep.py --gamma 1e5 --temps 0.25 0.5 1.0 --max-km 100
"""

import argparse

import numpy as np

from g4vdecoh.g4v import ModelConstants
from g4vdecoh.link import ENCODINGS, LinkConfig, sweep_length


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=1e5)
    ap.add_argument("--temps", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    ap.add_argument("--max-km", type=float, default=100.0)
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--alpha", type=float, default=0.2, help="fiber loss in dB/km")
    args = ap.parse_args()

    lengths = np.linspace(0.0, args.max_km, args.points)
    for enc in ENCODINGS:
        for temp in args.temps:
            c = ModelConstants.physical(50e9, temp, gamma=args.gamma)
            rows = sweep_length(LinkConfig(encoding=enc, alpha_db_per_km=args.alpha), c, lengths)
            print(f"\n{enc}, T = {temp:g} K")
            print(f"{'L [km]':>8} {'I_swap':>9} {'I_herald':>9} {'p_success':>10}")
            for r in rows:
                print(f"{r.length_km:8.1f} {r.i_at_swap:9.4f} {r.i_at_herald:9.4f} {r.success_prob:10.3e}")


if __name__ == "__main__":
    main()
