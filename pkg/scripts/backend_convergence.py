"""Step-size convergence of the RK4 and Kraus backends against the spectral propagator.

The coherent frequency is set to a multiple of gamma (2 nbar + 1); at the
physical 2 pi * 50 GHz both explicit schemes would need sub-picosecond steps.

    python3 scripts/backend_convergence.py --gamma 1e3 --nbar 0.5 --omega-ratio 2
"""

import argparse
import warnings

from g4vdecoh.g4v import ModelConstants
from g4vdecoh.lindblad import (
    StepSizeWarning,
    build_generator,
    kraus_completeness_constant,
    kraus_evolve,
    kraus_set,
    rk4_evolve,
    spectral_propagator,
)
from g4vdecoh.metrics import equal_superposition
from g4vdecoh.qstate import trace_distance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=1e3)
    ap.add_argument("--nbar", type=float, default=0.5)
    ap.add_argument("--omega-ratio", type=float, default=2.0)
    args = ap.parse_args()

    c = ModelConstants.from_rates(args.gamma, args.nbar)
    c = c.replace(omega_a_prime=args.omega_ratio * c.total_rate)
    rho = equal_superposition().matrix
    t = 1.0 / c.total_rate
    ref = spectral_propagator(build_generator(c), t).apply(rho)
    print(f"gamma={c.gamma:g}/s nbar={c.nbar:g} omega'={c.omega_a_prime:.4g} rad/s, t = 1/(gamma(2nbar+1))")
    print(f"Kraus completeness constant c = {kraus_completeness_constant(c):.6g}")
    print(f"{'x = rate*dt':>12} {'RK4 err':>11} {'Kraus err':>11} {'Kraus defect':>13}")
    for x in (2e-2, 1e-2, 5e-3, 2e-3, 1e-3):
        dt = x / c.total_rate
        n = int(round(1 / x))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StepSizeWarning)
            rk = trace_distance(rk4_evolve(rho, c, t, dt), ref)
            ks = kraus_set(c, dt)
        kr = trace_distance(kraus_evolve(rho, ks, n), ref)
        print(f"{x:12.0e} {rk:11.3e} {kr:11.3e} {ks.completeness_defect():13.3e}")


if __name__ == "__main__":
    main()
