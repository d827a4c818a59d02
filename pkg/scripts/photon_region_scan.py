"""Scan the photon region across spin and cosmological constant.

Prints, for each (spin, Lambda) pair, the horizon radii and the radial
extent [r1, r2] of the spherical-photon-orbit family, plus the margin
between the region and the event horizon.  Useful for choosing escape
radii and sanity-checking new parameter ranges before a pressure run.
"""

import argparse

import numpy as np

from trapped_pressure.spacetime import SpacetimeParams, horizon_roots
from trapped_pressure.trapped import photon_region_bounds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mass", type=float, default=1.0)
    ap.add_argument("--spins", type=float, nargs="+",
                    default=[0.0, 0.3, 0.6, 0.9, 0.98])
    ap.add_argument("--lambdas", type=float, nargs="+",
                    default=[0.0, 0.01, 0.02, 0.04])
    args = ap.parse_args()

    print(f"{'spin':>6} {'lambda':>8} {'r_event':>10} {'r_cosmo':>10} "
          f"{'r1':>10} {'r2':>10} {'width':>10} {'gap':>8}")
    for a in args.spins:
        for lam in args.lambdas:
            params = SpacetimeParams(args.mass, a, lam)
            roots = horizon_roots(params)
            r1, r2 = photon_region_bounds(params)
            gap = r1 - roots.r_event
            print(f"{a:6.2f} {lam:8.3f} {roots.r_event:10.6f} "
                  f"{roots.r_cosmo:10.4g} {r1:10.6f} {r2:10.6f} "
                  f"{r2 - r1:10.6f} {gap:8.4f}")


if __name__ == "__main__":
    main()
