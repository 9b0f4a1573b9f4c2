"""Terminal polar order of the homogeneous equation against kappa, next to the
nonzero root of r = I1(kappa r)/I0(kappa r)."""

import argparse

import numpy as np

from vicsek_mf.homogeneous_spectral import (
    FourierDensity,
    consistency_root,
    integrate_spectral,
    polar_order_spectral,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappas", type=float, nargs="+", default=list(np.arange(0.5, 6.01, 0.5)))
    ap.add_argument("--T", type=float, default=40.0)
    a = ap.parse_args()
    print(f"{'kappa':>6} {'|J|(T)':>10} {'root':>10}")
    for k in a.kappas:
        out = integrate_spectral(FourierDensity.perturbed_uniform(0.1), k, a.T)
        print(f"{k:6.2f} {polar_order_spectral(out).magnitude:10.6f} {consistency_root(k):10.6f}")


if __name__ == "__main__":
    main()
