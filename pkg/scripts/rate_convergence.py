"""Convergence of the unstable rate lambda^u_T / T with the horizon T.

On a single trapped orbit the finite-time rate oscillates around its limit
(the orbit sweeps latitudes with different local expansion); the plot-ready
CSV shows both the raw quotient and the trailing-window least-squares slope
that the ensemble builder actually uses.
"""

import argparse
import csv

import numpy as np

from trapped_pressure.flow import IntegratorConfig
from trapped_pressure.pressure import log_unstable_jacobian
from trapped_pressure.spacetime import SpacetimeParams
from trapped_pressure.trapped import kerr_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=1.0)
    ap.add_argument("--spin", type=float, default=0.9)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.0)
    ap.add_argument("--sample-index", type=int, default=0)
    ap.add_argument("--T-max", type=float, default=240.0)
    ap.add_argument("--out", default="rate_convergence.csv")
    args = ap.parse_args()

    system = kerr_system(SpacetimeParams(args.mass, args.spin, args.lam))
    sample = np.asarray(
        system.trapped_sampler(args.sample_index + 1, 0)[args.sample_index])
    cfg = IntegratorConfig()

    T_grid = np.arange(20.0, args.T_max + 1.0, 20.0)
    rows = []
    print(f"{'T':>6} {'lam_u/T':>12}")
    for T in T_grid:
        rec = log_unstable_jacobian(system, sample, float(T), config=cfg)
        rows.append((T, rec.lam_u, rec.lam_u / T))
        print(f"{T:6.0f} {rec.lam_u / T:12.6f}")

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["T", "lam_u", "rate"])
        w.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
